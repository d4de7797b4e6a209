//! Columnar in-memory datasets.
//!
//! A [`Dataset`] is an immutable view over shared column storage: a list of
//! column descriptors plus the (ascending) source row indices the view
//! selects. Subsetting never copies values, so facets produced while
//! building a table stay cheap and can be compared by row identity.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed CSV at line {line}: {message}")]
    Ingest { line: u64, message: String },
    #[error("schema error in column `{column}`: {message}")]
    Schema { column: String, message: String },
    #[error("{0}")]
    Argument(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A single nullable scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Number(f64),
    Text(String),
    Bool(bool),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            _ => None,
        }
    }

    /// Text form used for level membership and CSV output. `None` for nulls.
    pub fn key(&self) -> Option<String> {
        match self {
            Value::Null => None,
            Value::Number(v) => Some(v.to_string()),
            Value::Text(s) => Some(s.clone()),
            Value::Bool(b) => Some(bool_level(*b).to_string()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.key() {
            Some(k) => f.write_str(&k),
            None => Ok(()),
        }
    }
}

fn bool_level(b: bool) -> &'static str {
    if b {
        "TRUE"
    } else {
        "FALSE"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Categorical,
    Numeric,
    String,
    Boolean,
}

/// Owned column used to construct a [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<Value>,
    /// Ordered levels; only meaningful for categorical columns.
    pub levels: Vec<String>,
    pub label: Option<String>,
}

impl Column {
    /// Categorical column. When `levels` is `None` they are taken in order
    /// of first appearance.
    pub fn categorical<S: AsRef<str>>(
        name: impl Into<String>,
        values: &[Option<S>],
        levels: Option<Vec<String>>,
    ) -> Self {
        let values: Vec<Value> = values
            .iter()
            .map(|v| match v {
                Some(s) => Value::Text(s.as_ref().to_string()),
                None => Value::Null,
            })
            .collect();
        let levels = levels.unwrap_or_else(|| first_appearance(&values));
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
            values,
            levels,
            label: None,
        }
    }

    pub fn numeric(name: impl Into<String>, values: &[Option<f64>]) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            values: values
                .iter()
                .map(|v| v.map_or(Value::Null, Value::Number))
                .collect(),
            levels: Vec::new(),
            label: None,
        }
    }

    pub fn string<S: AsRef<str>>(name: impl Into<String>, values: &[Option<S>]) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::String,
            values: values
                .iter()
                .map(|v| match v {
                    Some(s) => Value::Text(s.as_ref().to_string()),
                    None => Value::Null,
                })
                .collect(),
            levels: Vec::new(),
            label: None,
        }
    }

    pub fn boolean(name: impl Into<String>, values: &[Option<bool>]) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Boolean,
            values: values.iter().map(|v| v.map_or(Value::Null, Value::Bool)).collect(),
            levels: Vec::new(),
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

fn first_appearance(values: &[Value]) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut levels = Vec::new();
    for v in values {
        if let Value::Text(s) = v {
            if seen.insert(s.as_str()) {
                levels.push(s.clone());
            }
        }
    }
    levels
}

#[derive(Debug, Clone)]
struct StoredColumn {
    name: String,
    kind: ColumnKind,
    label: Option<String>,
    levels: Arc<[String]>,
    values: Arc<[Value]>,
}

/// Immutable columnar dataset (or a row subset of one).
#[derive(Debug, Clone)]
pub struct Dataset {
    origin: Arc<()>,
    columns: Vec<StoredColumn>,
    rows: Arc<[usize]>,
}

/// Borrowed view of one column restricted to a dataset's rows.
#[derive(Debug, Clone, Copy)]
pub struct ColumnSlice<'a> {
    column: &'a StoredColumn,
    rows: &'a [usize],
}

impl<'a> ColumnSlice<'a> {
    pub fn name(&self) -> &'a str {
        &self.column.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.column.kind
    }

    pub fn label(&self) -> Option<&'a str> {
        self.column.label.as_deref()
    }

    /// Levels used when the column is split or tabulated. Boolean columns
    /// behave as if their levels were `["FALSE", "TRUE"]`.
    pub fn levels(&self) -> Vec<&'a str> {
        match self.column.kind {
            ColumnKind::Boolean => vec!["FALSE", "TRUE"],
            _ => self.column.levels.iter().map(String::as_str).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, i: usize) -> &'a Value {
        &self.column.values[self.rows[i]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a Value> + 'a {
        let values = &self.column.values;
        self.rows.iter().map(move |&r| &values[r])
    }

    /// Non-null numeric values in row order.
    pub fn numbers(&self) -> impl Iterator<Item = f64> + 'a {
        self.iter().filter_map(Value::as_number)
    }

    /// Non-null values as level keys, in row order.
    pub fn keys(&self) -> impl Iterator<Item = String> + 'a {
        self.iter().filter_map(Value::key)
    }

    pub fn non_null_count(&self) -> usize {
        self.iter().filter(|v| !v.is_null()).count()
    }

    pub fn distinct_count(&self) -> usize {
        self.iter()
            .filter_map(Value::key)
            .collect::<HashSet<_>>()
            .len()
    }
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self, DataError> {
        let n = columns.first().map_or(0, |c| c.values.len());
        let mut names = HashSet::new();
        let mut stored = Vec::with_capacity(columns.len());
        for col in columns {
            if !names.insert(col.name.clone()) {
                return Err(DataError::Argument(format!(
                    "duplicate column name `{}`",
                    col.name
                )));
            }
            if col.values.len() != n {
                return Err(DataError::Argument(format!(
                    "column `{}` has {} values, expected {}",
                    col.name,
                    col.values.len(),
                    n
                )));
            }
            validate_column(&col)?;
            stored.push(StoredColumn {
                name: col.name,
                kind: col.kind,
                label: col.label,
                levels: col.levels.into(),
                values: col.values.into(),
            });
        }
        Ok(Dataset {
            origin: Arc::new(()),
            columns: stored,
            rows: (0..n).collect(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<ColumnSlice<'_>> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|column| ColumnSlice {
                column,
                rows: &self.rows,
            })
    }

    pub fn try_column(&self, name: &str) -> Result<ColumnSlice<'_>, DataError> {
        self.column(name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    pub fn columns(&self) -> impl Iterator<Item = ColumnSlice<'_>> {
        self.columns.iter().map(move |column| ColumnSlice {
            column,
            rows: &self.rows,
        })
    }

    /// Source row indices selected by this view, ascending.
    pub fn row_ids(&self) -> &[usize] {
        &self.rows
    }

    /// Whether both datasets are views over the same storage.
    pub fn same_origin(&self, other: &Dataset) -> bool {
        Arc::ptr_eq(&self.origin, &other.origin)
    }

    fn with_rows(&self, rows: Vec<usize>) -> Dataset {
        Dataset {
            origin: Arc::clone(&self.origin),
            columns: self.columns.clone(),
            rows: rows.into(),
        }
    }

    /// Keeps rows where `mask` is true. Categorical levels are preserved.
    pub fn filter_rows(&self, mask: &[bool]) -> Result<Dataset, DataError> {
        if mask.len() != self.n_rows() {
            return Err(DataError::Argument(format!(
                "mask has length {}, dataset has {} rows",
                mask.len(),
                self.n_rows()
            )));
        }
        Ok(self.with_rows(
            self.rows
                .iter()
                .zip(mask)
                .filter(|(_, &keep)| keep)
                .map(|(&r, _)| r)
                .collect(),
        ))
    }

    /// Rows at the given positions of this view (positions must ascend).
    pub fn select(&self, positions: &[usize]) -> Result<Dataset, DataError> {
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DataError::Argument(
                "row positions must be strictly ascending".into(),
            ));
        }
        if let Some(&p) = positions.last() {
            if p >= self.n_rows() {
                return Err(DataError::Argument(format!(
                    "row position {p} out of range for {} rows",
                    self.n_rows()
                )));
            }
        }
        Ok(self.with_rows(positions.iter().map(|&p| self.rows[p]).collect()))
    }

    /// Rows whose value in `var` matches `pred`.
    pub fn filter_by(
        &self,
        var: &str,
        mut pred: impl FnMut(&Value) -> bool,
    ) -> Result<Dataset, DataError> {
        let col = self.try_column(var)?;
        let rows = self
            .rows
            .iter()
            .zip(col.iter())
            .filter(|(_, v)| pred(v))
            .map(|(&r, _)| r)
            .collect();
        Ok(self.with_rows(rows))
    }

    /// Row union of two views over the same storage. Column metadata is
    /// taken from `self`.
    pub fn union(&self, other: &Dataset) -> Result<Dataset, DataError> {
        if !self.same_origin(other) {
            return Err(DataError::Argument(
                "cannot union datasets with different origins".into(),
            ));
        }
        let (a, b) = (&self.rows, &other.rows);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(self.with_rows(out))
    }

    /// Rows of `self` that are also in `other`. Level lists that `other`
    /// has narrowed are intersected with those of `self`.
    pub fn restrict_to(&self, other: &Dataset) -> Result<Dataset, DataError> {
        if !self.same_origin(other) {
            return Err(DataError::Argument(
                "cannot intersect datasets with different origins".into(),
            ));
        }
        let (a, b) = (&self.rows, &other.rows);
        let mut out = Vec::with_capacity(a.len().min(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        let mut ds = self.with_rows(out);
        for (mine, theirs) in ds.columns.iter_mut().zip(&other.columns) {
            if !Arc::ptr_eq(&mine.levels, &theirs.levels) && mine.levels != theirs.levels {
                let keep: HashSet<&String> = theirs.levels.iter().collect();
                mine.levels = mine
                    .levels
                    .iter()
                    .filter(|l| keep.contains(l))
                    .cloned()
                    .collect();
            }
        }
        Ok(ds)
    }

    /// Whether every row of `self` is also a row of `other`.
    pub fn is_subset_of(&self, other: &Dataset) -> bool {
        if !self.same_origin(other) {
            return false;
        }
        let mut j = 0;
        for &r in self.rows.iter() {
            while j < other.rows.len() && other.rows[j] < r {
                j += 1;
            }
            if j == other.rows.len() || other.rows[j] != r {
                return false;
            }
        }
        true
    }

    /// Same rows with the level list of categorical column `var` replaced.
    pub fn with_levels(&self, var: &str, levels: Vec<String>) -> Result<Dataset, DataError> {
        let mut ds = self.clone();
        let col = ds
            .columns
            .iter_mut()
            .find(|c| c.name == var)
            .ok_or_else(|| DataError::UnknownColumn(var.to_string()))?;
        if col.kind != ColumnKind::Categorical {
            return Err(DataError::Argument(format!(
                "column `{var}` is not categorical"
            )));
        }
        col.levels = levels.into();
        Ok(ds)
    }

    /// Distinct non-null values of `key`, or the row count when absent.
    pub fn distinct_count(&self, key: Option<&str>) -> Result<usize, DataError> {
        match key {
            None => Ok(self.n_rows()),
            Some(k) => Ok(self.try_column(k)?.distinct_count()),
        }
    }

    /// Materializes the view as owned columns (levels as currently seen).
    pub fn to_columns(&self) -> Vec<Column> {
        self.columns()
            .map(|c| Column {
                name: c.name().to_string(),
                kind: c.kind(),
                values: c.iter().cloned().collect(),
                levels: c.column.levels.to_vec(),
                label: c.column.label.clone(),
            })
            .collect()
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.to_columns() == other.to_columns()
    }
}

fn validate_column(col: &Column) -> Result<(), DataError> {
    let bad = |message: String| DataError::Schema {
        column: col.name.clone(),
        message,
    };
    match col.kind {
        ColumnKind::Categorical => {
            let mut seen = HashSet::new();
            for l in &col.levels {
                if !seen.insert(l.as_str()) {
                    return Err(bad(format!("duplicate level `{l}`")));
                }
            }
            for v in &col.values {
                match v {
                    Value::Null => {}
                    Value::Text(s) if seen.contains(s.as_str()) => {}
                    Value::Text(s) => {
                        return Err(bad(format!("value `{s}` is not a declared level")))
                    }
                    other => return Err(bad(format!("non-text value `{other}`"))),
                }
            }
        }
        ColumnKind::Numeric => {
            for v in &col.values {
                match v {
                    Value::Null => {}
                    Value::Number(x) if x.is_finite() => {}
                    other => return Err(bad(format!("non-finite or non-numeric value `{other:?}`"))),
                }
            }
        }
        ColumnKind::String => {
            if let Some(v) = col.values.iter().find(|v| !matches!(v, Value::Null | Value::Text(_))) {
                return Err(bad(format!("non-text value `{v}`")));
            }
        }
        ColumnKind::Boolean => {
            if let Some(v) = col.values.iter().find(|v| !matches!(v, Value::Null | Value::Bool(_))) {
                return Err(bad(format!("non-boolean value `{v}`")));
            }
        }
    }
    Ok(())
}

/// Per-column declaration in a schema sidecar.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ColumnKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Column name to declaration. Serialized as a JSON object.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    pub columns: IndexMap<String, ColumnSpec>,
}

impl Schema {
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        serde_json::from_str(text).map_err(|e| DataError::Schema {
            column: String::new(),
            message: format!("invalid schema document: {e}"),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    /// Schema describing an existing dataset exactly (kinds, levels, labels).
    pub fn from_dataset(ds: &Dataset) -> Self {
        let columns = ds
            .columns()
            .map(|c| {
                let levels = (c.kind() == ColumnKind::Categorical)
                    .then(|| c.column.levels.to_vec());
                (
                    c.name().to_string(),
                    ColumnSpec {
                        kind: Some(c.kind()),
                        levels,
                        label: c.label().map(str::to_string),
                    },
                )
            })
            .collect();
        Schema { columns }
    }
}

/// Reads a CSV file with a mandatory header row.
pub fn read_csv(path: impl AsRef<Path>, schema: Option<&Schema>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv_from(file, schema)
}

pub fn read_csv_str(text: &str, schema: Option<&Schema>) -> Result<Dataset, DataError> {
    read_csv_from(text.as_bytes(), schema)
}

pub fn read_csv_from<R: Read>(reader: R, schema: Option<&Schema>) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(DataError::Ingest {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        for (col, field) in raw.iter_mut().zip(record.iter()) {
            col.push((!field.is_empty()).then(|| field.to_string()));
        }
    }

    if let Some(schema) = schema {
        for name in schema.columns.keys() {
            if !headers.contains(name) {
                return Err(DataError::Schema {
                    column: name.clone(),
                    message: "declared column not present in data".into(),
                });
            }
        }
    }

    let columns = headers
        .into_iter()
        .zip(raw)
        .map(|(name, cells)| {
            let spec = schema.and_then(|s| s.columns.get(&name));
            build_column(name, cells, spec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(columns)
}

fn csv_error(e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => DataError::Ingest {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => DataError::Ingest {
            line,
            message: e.to_string(),
        },
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "TRUE" | "true" => Some(true),
        "FALSE" | "false" => Some(false),
        _ => None,
    }
}

fn infer_kind(cells: &[Option<String>]) -> ColumnKind {
    let mut present = cells.iter().flatten().peekable();
    if present.peek().is_none() {
        return ColumnKind::Categorical;
    }
    if cells.iter().flatten().all(|s| parse_number(s).is_some()) {
        ColumnKind::Numeric
    } else if cells.iter().flatten().all(|s| parse_bool(s).is_some()) {
        ColumnKind::Boolean
    } else {
        ColumnKind::Categorical
    }
}

fn build_column(
    name: String,
    cells: Vec<Option<String>>,
    spec: Option<&ColumnSpec>,
) -> Result<Column, DataError> {
    let kind = match spec {
        Some(ColumnSpec { kind: Some(k), .. }) => *k,
        Some(ColumnSpec {
            levels: Some(_), ..
        }) => ColumnKind::Categorical,
        _ => infer_kind(&cells),
    };
    let schema_err = |message: String| DataError::Schema {
        column: name.clone(),
        message,
    };
    let declared_levels = spec.and_then(|s| s.levels.clone());
    if declared_levels.is_some() && kind != ColumnKind::Categorical {
        return Err(schema_err(format!(
            "levels declared for non-categorical kind {kind:?}"
        )));
    }
    let values: Vec<Value> = match kind {
        ColumnKind::Numeric => cells
            .iter()
            .map(|c| match c {
                None => Ok(Value::Null),
                Some(s) => parse_number(s)
                    .map(Value::Number)
                    .ok_or_else(|| schema_err(format!("value `{s}` is not a finite number"))),
            })
            .collect::<Result<_, _>>()?,
        ColumnKind::Boolean => cells
            .iter()
            .map(|c| match c {
                None => Ok(Value::Null),
                Some(s) => parse_bool(s)
                    .map(Value::Bool)
                    .ok_or_else(|| schema_err(format!("value `{s}` is not a boolean"))),
            })
            .collect::<Result<_, _>>()?,
        ColumnKind::Categorical | ColumnKind::String => cells
            .into_iter()
            .map(|c| c.map_or(Value::Null, Value::Text))
            .collect(),
    };
    let levels = match (kind, declared_levels) {
        (ColumnKind::Categorical, Some(levels)) => {
            let known: HashSet<&str> = levels.iter().map(String::as_str).collect();
            if let Some(Value::Text(s)) = values
                .iter()
                .find(|v| matches!(v, Value::Text(s) if !known.contains(s.as_str())))
            {
                return Err(schema_err(format!("value `{s}` is not among the declared levels")));
            }
            levels
        }
        (ColumnKind::Categorical, None) => first_appearance(&values),
        _ => Vec::new(),
    };
    Ok(Column {
        name,
        kind,
        values,
        levels,
        label: spec.and_then(|s| s.label.clone()),
    })
}

/// Writes the dataset as CSV (header row, nulls as empty fields).
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| DataError::Io {
        path: String::from("<csv>"),
        source: std::io::Error::other(e),
    };
    w.write_record(ds.column_names()).map_err(io)?;
    let cols: Vec<ColumnSlice<'_>> = ds.columns().collect();
    for i in 0..ds.n_rows() {
        w.write_record(cols.iter().map(|c| c.get(i).key().unwrap_or_default()))
            .map_err(io)?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: String::from("<csv>"),
        source,
    })
}

pub fn to_csv_string(ds: &Dataset) -> String {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is UTF-8")
}
