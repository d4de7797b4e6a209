//! Monospace text rendering.

use crate::table::{DisplayRow, HeaderSpan, TableTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    /// Separator character; `None` uses the table's own.
    pub hsep: Option<char>,
    pub indent_width: usize,
    pub min_gap: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            hsep: None,
            indent_width: 2,
            min_gap: 3,
        }
    }
}

/// Column geometry shared by the header and body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnLayout {
    pub label_width: usize,
    pub widths: Vec<usize>,
    pub gap: usize,
    /// Header label lines, top first.
    pub header: Vec<Vec<HeaderSpan>>,
    /// `(N=..)` strings, when the table shows counts.
    pub counts: Option<Vec<String>>,
}

impl ColumnLayout {
    /// Character offset at which leaf column `j` starts.
    pub fn offset(&self, j: usize) -> usize {
        self.label_width + self.widths[..j].iter().map(|w| w + self.gap).sum::<usize>() + self.gap
    }

    pub fn span_width(&self, start: usize, len: usize) -> usize {
        self.widths[start..start + len].iter().sum::<usize>() + self.gap * len.saturating_sub(1)
    }

    pub fn total_width(&self) -> usize {
        self.label_width + self.widths.iter().map(|w| w + self.gap).sum::<usize>()
    }

    /// Lines above the first body line, separator included.
    pub fn header_lines(&self) -> usize {
        self.header.len() + usize::from(self.counts.is_some()) + 1
    }
}

fn width(s: &str) -> usize {
    s.chars().count()
}

/// Body text for every display row: the label (with indentation and
/// footnote markers) and the cell strings. Footnotes are numbered in
/// reading order.
struct Body<'a> {
    rows: Vec<(String, Vec<String>)>,
    notes: Vec<&'a str>,
}

fn body<'a>(rows: &[DisplayRow<'a>], indent_width: usize) -> Body<'a> {
    let mut notes: Vec<&'a str> = Vec::new();
    let mut mark = |text: &mut String, list: &'a [String]| {
        for n in list {
            notes.push(n);
            if !text.is_empty() {
                text.push(' ');
            }
            text.push_str(&format!("{{{}}}", notes.len()));
        }
    };
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let mut label = " ".repeat(r.indent * indent_width);
        label.push_str(r.label);
        mark(&mut label, r.footnotes);
        let cells = r
            .cells
            .iter()
            .map(|c| {
                let mut s = c.formatted();
                mark(&mut s, &c.footnotes);
                s
            })
            .collect();
        out.push((label, cells));
    }
    Body { rows: out, notes }
}

pub fn compute_column_layout(table: &TableTree, options: &RenderOptions) -> ColumnLayout {
    let display = table.display_rows();
    compute(table, &body(&display, options.indent_width), options)
}

fn compute(table: &TableTree, body: &Body<'_>, options: &RenderOptions) -> ColumnLayout {
    let cols = table.columns();
    let n = cols.n_leaves();
    let header = cols.header_rows();
    let counts = cols
        .show_colcounts
        .then(|| cols.counts().iter().map(|c| format!("(N={c})")).collect::<Vec<_>>());
    let mut widths = vec![0usize; n];
    for (_, cells) in &body.rows {
        for (w, c) in widths.iter_mut().zip(cells) {
            *w = (*w).max(width(c));
        }
    }
    if let Some(counts) = &counts {
        for (w, c) in widths.iter_mut().zip(counts) {
            *w = (*w).max(width(c));
        }
    }
    // Single-column header fragments first, then wider spans bottom-up.
    for line in header.iter().rev() {
        for span in line.iter().filter(|s| s.len == 1) {
            widths[span.start] = widths[span.start].max(width(&span.label));
        }
    }
    for line in header.iter().rev() {
        for span in line.iter().filter(|s| s.len > 1) {
            let have = widths[span.start..span.start + span.len].iter().sum::<usize>() + options.min_gap * (span.len - 1);
            let need = width(&span.label);
            if need > have {
                let extra = need - have;
                for k in 0..span.len {
                    widths[span.start + k] += extra / span.len + usize::from(k < extra % span.len);
                }
            }
        }
    }
    let label_width = body.rows.iter().map(|(l, _)| width(l)).max().unwrap_or(0);
    ColumnLayout {
        label_width,
        widths,
        gap: options.min_gap,
        header,
        counts,
    }
}

fn put(line: &mut Vec<char>, at: usize, span: usize, text: &str) {
    let w = width(text);
    let left = at + span.saturating_sub(w) / 2;
    if line.len() < left + w {
        line.resize(left + w, ' ');
    }
    for (i, ch) in text.chars().enumerate() {
        line[left + i] = ch;
    }
}

fn finish(line: Vec<char>) -> String {
    let s: String = line.into_iter().collect();
    s.trim_end().to_string()
}

pub fn render_text(table: &TableTree, options: &RenderOptions) -> String {
    let display = table.display_rows();
    let body = body(&display, options.indent_width);
    let lay = compute(table, &body, options);
    let total = lay.total_width();
    let hsep = options.hsep.unwrap_or(table.hsep());
    let rule: String = std::iter::repeat_n(hsep, total).collect();
    let mut out: Vec<String> = Vec::new();
    for line in &lay.header {
        let mut buf = vec![' '; total];
        for span in line {
            put(&mut buf, lay.offset(span.start), lay.span_width(span.start, span.len), &span.label);
        }
        out.push(finish(buf));
    }
    if let Some(counts) = &lay.counts {
        let mut buf = vec![' '; total];
        for (j, c) in counts.iter().enumerate() {
            put(&mut buf, lay.offset(j), lay.widths[j], c);
        }
        out.push(finish(buf));
    }
    out.push(rule.clone());
    for (label, cells) in &body.rows {
        let mut buf: Vec<char> = label.chars().collect();
        buf.resize(total, ' ');
        for (j, c) in cells.iter().enumerate() {
            put(&mut buf, lay.offset(j), lay.widths[j], c);
        }
        out.push(finish(buf));
    }
    if !body.notes.is_empty() {
        out.push(rule);
        for (i, n) in body.notes.iter().enumerate() {
            out.push(format!("{{{}}} {n}", i + 1));
        }
    }
    let mut s = out.join("\n");
    s.push('\n');
    s
}
