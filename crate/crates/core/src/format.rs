//! Cell format strings.
//!
//! A format is a skeleton of literal characters with numeric slots:
//! `xx` prints a value as-is (integers without decimals), `xx.` rounds to
//! zero decimals, and `xx.x` through `xx.xxxx` round to that many places.
//! A slot immediately followed by `%` takes a proportion and prints it
//! scaled by 100. Rounding is half away from zero, applied to the shortest
//! decimal representation of the value.

use std::fmt;

use thiserror::Error;

/// Longest text a single slot may produce before falling back to
/// exponent notation.
pub const MAX_SLOT_WIDTH: usize = 20;

const MAX_DECIMALS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid format `{source_text}` at byte {offset}: {message}")]
pub struct FormatParseError {
    pub source_text: String,
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("format `{format}` has {slots} slot(s) but the value has {arity}")]
    Arity {
        format: String,
        slots: usize,
        arity: usize,
    },
}

/// Raw cell content.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    /// Occupies a row but renders empty.
    Blank,
    Number(f64),
    Tuple(Vec<f64>),
    Text(String),
}

impl CellValue {
    pub fn arity(&self) -> usize {
        match self {
            CellValue::Blank => 0,
            CellValue::Number(_) | CellValue::Text(_) => 1,
            CellValue::Tuple(v) => v.len(),
        }
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, CellValue::Blank)
    }

    /// Numeric atoms in order (a number, or each tuple element).
    pub fn numbers(&self) -> Vec<f64> {
        match self {
            CellValue::Number(v) => vec![*v],
            CellValue::Tuple(v) => v.clone(),
            _ => Vec::new(),
        }
    }

    /// Serialized raw form: numbers in shortest round-trip notation, tuple
    /// elements joined by `|`, non-finite numbers as `NA`, blanks empty.
    pub fn to_raw_string(&self) -> String {
        fn num(v: f64) -> String {
            if v.is_finite() {
                v.to_string()
            } else {
                "NA".to_string()
            }
        }
        match self {
            CellValue::Blank => String::new(),
            CellValue::Number(v) => num(*v),
            CellValue::Tuple(v) => v.iter().map(|x| num(*x)).collect::<Vec<_>>().join("|"),
            CellValue::Text(s) => s.clone(),
        }
    }

    /// Inverse of [`CellValue::to_raw_string`]. Text that looks entirely
    /// numeric comes back as a number.
    pub fn parse_raw(s: &str) -> CellValue {
        if s.is_empty() {
            return CellValue::Blank;
        }
        let parse = |p: &str| -> Option<f64> {
            if p == "NA" {
                Some(f64::NAN)
            } else {
                p.parse::<f64>().ok()
            }
        };
        let parts: Vec<Option<f64>> = s.split('|').map(parse).collect();
        if parts.iter().all(Option::is_some) {
            let nums: Vec<f64> = parts.into_iter().flatten().collect();
            if nums.len() == 1 {
                CellValue::Number(nums[0])
            } else {
                CellValue::Tuple(nums)
            }
        } else {
            CellValue::Text(s.to_string())
        }
    }
}

impl From<f64> for CellValue {
    fn from(v: f64) -> Self {
        CellValue::Number(v)
    }
}

impl From<usize> for CellValue {
    fn from(v: usize) -> Self {
        CellValue::Number(v as f64)
    }
}

impl From<Vec<f64>> for CellValue {
    fn from(v: Vec<f64>) -> Self {
        CellValue::Tuple(v)
    }
}

impl From<&str> for CellValue {
    fn from(v: &str) -> Self {
        CellValue::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    /// `None` prints the value as-is.
    pub decimals: Option<usize>,
    pub percent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Slot(Slot),
    Literal(String),
}

/// Parsed format string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatSpec {
    source: String,
    tokens: Vec<Token>,
}

impl FormatSpec {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.tokens.iter().filter_map(|t| match t {
            Token::Slot(s) => Some(*s),
            Token::Literal(_) => None,
        })
    }

    pub fn slot_count(&self) -> usize {
        self.slots().count()
    }

    fn skeleton_len(&self) -> usize {
        self.tokens
            .iter()
            .map(|t| match t {
                Token::Literal(l) => l.chars().count(),
                Token::Slot(_) => 0,
            })
            .sum()
    }

    /// Upper bound on the length of any string [`FormatSpec::apply`] returns.
    pub fn max_output_len(&self) -> usize {
        self.skeleton_len() + MAX_SLOT_WIDTH * self.slot_count()
    }

    pub fn apply(&self, value: &CellValue) -> Result<String, FormatError> {
        if value.is_blank() {
            return Ok(String::new());
        }
        let slots = self.slot_count();
        if value.arity() != slots {
            // Text is printed verbatim whatever the skeleton.
            if let CellValue::Text(t) = value {
                return Ok(t.clone());
            }
            return Err(FormatError::Arity {
                format: self.source.clone(),
                slots,
                arity: value.arity(),
            });
        }
        let mut atoms: Vec<Atom<'_>> = match value {
            CellValue::Number(v) => vec![Atom::Num(*v)],
            CellValue::Tuple(v) => v.iter().map(|x| Atom::Num(*x)).collect(),
            CellValue::Text(t) => vec![Atom::Text(t)],
            CellValue::Blank => unreachable!(),
        };
        atoms.reverse();
        let mut out = String::new();
        for token in &self.tokens {
            match token {
                Token::Literal(l) => out.push_str(l),
                Token::Slot(slot) => match atoms.pop().expect("arity checked") {
                    Atom::Text(t) => out.push_str(t),
                    Atom::Num(v) => out.push_str(&format_slot(v, *slot)),
                },
            }
        }
        Ok(out)
    }
}

enum Atom<'a> {
    Num(f64),
    Text(&'a str),
}

impl fmt::Display for FormatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tokens {
            match t {
                Token::Literal(l) => f.write_str(l)?,
                Token::Slot(s) => {
                    f.write_str("xx")?;
                    if let Some(d) = s.decimals {
                        f.write_str(".")?;
                        for _ in 0..d {
                            f.write_str("x")?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for FormatSpec {
    type Err = FormatParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_format(s)
    }
}

pub fn parse_format(spec: &str) -> Result<FormatSpec, FormatParseError> {
    let err = |offset: usize, message: &str| FormatParseError {
        source_text: spec.to_string(),
        offset,
        message: message.to_string(),
    };
    let bytes = spec.as_bytes();
    let mut tokens: Vec<Token> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'x' => {
                if bytes.get(i + 1) != Some(&b'x') {
                    return Err(err(i, "a slot starts with `xx`"));
                }
                i += 2;
                let mut decimals = None;
                if bytes.get(i) == Some(&b'.') {
                    i += 1;
                    let mut d = 0;
                    while bytes.get(i) == Some(&b'x') {
                        d += 1;
                        if d > MAX_DECIMALS {
                            return Err(err(i, "at most four decimal places are supported"));
                        }
                        i += 1;
                    }
                    decimals = Some(d);
                }
                if matches!(tokens.last(), Some(Token::Slot(_))) {
                    return Err(err(i, "adjacent slots need a literal between them"));
                }
                let percent = bytes.get(i) == Some(&b'%');
                tokens.push(Token::Slot(Slot { decimals, percent }));
            }
            b'(' | b')' | b'%' | b'-' | b',' | b'/' | b' ' => {
                let c = bytes[i] as char;
                match tokens.last_mut() {
                    Some(Token::Literal(l)) => l.push(c),
                    _ => tokens.push(Token::Literal(c.to_string())),
                }
                i += 1;
            }
            _ => {
                let ch = spec[i..].chars().next().unwrap_or('?');
                return Err(err(i, &format!("unexpected character `{ch}`")));
            }
        }
    }
    if !tokens.iter().any(|t| matches!(t, Token::Slot(_))) {
        return Err(err(0, "a format needs at least one `xx` slot"));
    }
    Ok(FormatSpec {
        source: spec.to_string(),
        tokens,
    })
}

pub fn apply_format(fmt: &FormatSpec, value: &CellValue) -> Result<String, FormatError> {
    fmt.apply(value)
}

fn format_slot(v: f64, slot: Slot) -> String {
    if !v.is_finite() {
        return "NA".to_string();
    }
    let v = if slot.percent { v * 100.0 } else { v };
    let text = match slot.decimals {
        Some(d) => round_half_away(v, d),
        None => free_format(v),
    };
    if text.chars().count() <= MAX_SLOT_WIDTH {
        text
    } else {
        format!("{:.*e}", slot.decimals.unwrap_or(3), v)
    }
}

fn free_format(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        v.to_string()
    }
}

/// Rounds half away from zero on the shortest round-trip decimal digits of
/// `v`, printing exactly `decimals` fractional digits.
pub fn round_half_away(v: f64, decimals: usize) -> String {
    if !v.is_finite() {
        return "NA".to_string();
    }
    let negative = v < 0.0;
    let sci = format!("{:e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i64 = exp.parse().expect("integer exponent");
    let digits: Vec<u8> = mantissa
        .bytes()
        .filter(u8::is_ascii_digit)
        .map(|b| b - b'0')
        .collect();
    // value = 0.d1 d2 d3 ... * 10^(exp + 1); keep `exp + 1 + decimals` digits.
    let keep = exp + 1 + decimals as i64;
    let mut scaled: Vec<u8> = if keep < 0 {
        vec![0]
    } else {
        let keep = keep as usize;
        if keep >= digits.len() {
            let mut d = digits.clone();
            d.resize(keep, 0);
            d
        } else {
            let mut d = digits[..keep].to_vec();
            if digits[keep] >= 5 {
                let mut i = d.len();
                loop {
                    if i == 0 {
                        d.insert(0, 1);
                        break;
                    }
                    i -= 1;
                    if d[i] == 9 {
                        d[i] = 0;
                    } else {
                        d[i] += 1;
                        break;
                    }
                }
            }
            d
        }
    };
    if scaled.is_empty() {
        scaled.push(0);
    }
    while scaled.len() <= decimals {
        scaled.insert(0, 0);
    }
    let split = scaled.len() - decimals;
    let mut int_part: String = scaled[..split].iter().map(|d| (b'0' + d) as char).collect();
    let trimmed = int_part.trim_start_matches('0');
    int_part = if trimmed.is_empty() { "0".into() } else { trimmed.into() };
    let frac: String = scaled[split..].iter().map(|d| (b'0' + d) as char).collect();
    let is_zero = scaled.iter().all(|&d| d == 0);
    let mut out = String::new();
    if negative && !is_zero {
        out.push('-');
    }
    out.push_str(&int_part);
    if decimals > 0 {
        out.push('.');
        out.push_str(&frac);
    }
    out
}
