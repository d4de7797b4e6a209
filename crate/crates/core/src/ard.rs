//! Long-form export of table cells (analysis results datasets).

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::format::CellValue;
use crate::table::{join_path, parse_path, RowKind, TableTree};

/// Schema version written into the CSV header line.
pub const ARD_SCHEMA: u32 = 1;

const COLUMNS: [&str; 8] = [
    "row_path",
    "col_path",
    "row_label",
    "kind",
    "stat_label",
    "raw_value",
    "formatted",
    "format",
];

#[derive(Debug, Error)]
pub enum ArdError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("ARD CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("ARD CSV: {0}")]
    Malformed(String),
}

/// One cell with its location in the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArdRecord {
    /// Path of the table holding the row (the row name is `stat_label`).
    pub row_path: Vec<String>,
    pub col_path: Vec<String>,
    pub row_label: String,
    pub kind: RowKind,
    pub stat_label: String,
    /// Serialized raw value; see [`CellValue::to_raw_string`].
    pub raw_value: String,
    pub formatted: String,
    pub format: String,
}

impl ArdRecord {
    pub fn value(&self) -> CellValue {
        CellValue::parse_raw(&self.raw_value)
    }

    /// Full path of the row the record came from.
    pub fn full_row_path(&self) -> Vec<String> {
        let mut p = self.row_path.clone();
        p.push(self.stat_label.clone());
        p
    }
}

/// Records for every non-blank cell, row-major.
pub fn as_ard(table: &TableTree) -> Vec<ArdRecord> {
    as_ard_with(table, false)
}

pub fn as_ard_with(table: &TableTree, include_blanks: bool) -> Vec<ArdRecord> {
    let cols = table.col_paths();
    let mut out = Vec::new();
    for (path, row) in table.rows_with_paths() {
        let row_path = path[..path.len() - 1].to_vec();
        for (cell, col) in row.cells.iter().zip(&cols) {
            if cell.value.is_blank() && !include_blanks {
                continue;
            }
            out.push(ArdRecord {
                row_path: row_path.clone(),
                col_path: col.clone(),
                row_label: row.label.clone(),
                kind: row.kind,
                stat_label: row.name.clone(),
                raw_value: cell.value.to_raw_string(),
                formatted: cell.formatted(),
                format: cell.format.source().to_string(),
            });
        }
    }
    out
}

fn header() -> Vec<String> {
    let mut h: Vec<String> = COLUMNS.iter().map(|c| c.to_string()).collect();
    let last = h.last_mut().expect("non-empty");
    last.push_str(&format!(" # ard_schema={ARD_SCHEMA}"));
    h
}

pub fn write_ard<W: Write>(records: &[ArdRecord], writer: W) -> Result<(), ArdError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header())?;
    for r in records {
        w.write_record([
            join_path(&r.row_path),
            join_path(&r.col_path),
            r.row_label.clone(),
            r.kind.to_string(),
            r.stat_label.clone(),
            r.raw_value.clone(),
            r.formatted.clone(),
            r.format.clone(),
        ])?;
    }
    w.flush().map_err(|e| ArdError::Csv(e.into()))?;
    Ok(())
}

pub fn ard_to_csv_string(records: &[ArdRecord]) -> String {
    let mut buf = Vec::new();
    write_ard(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("records are UTF-8")
}

pub fn write_ard_csv(records: &[ArdRecord], path: impl AsRef<Path>) -> Result<(), ArdError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| ArdError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_ard(records, std::io::BufWriter::new(file))
}

pub fn read_ard<R: Read>(reader: R) -> Result<Vec<ArdRecord>, ArdError> {
    let mut r = csv::Reader::from_reader(reader);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header() {
        return Err(ArdError::Malformed(format!("unexpected header {got:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or_default().to_string();
        let kind = match rec.get(3) {
            Some("analysis") => RowKind::Analysis,
            Some("content") => RowKind::Content,
            other => return Err(ArdError::Malformed(format!("unknown row kind {other:?}"))),
        };
        out.push(ArdRecord {
            row_path: parse_path(&field(0)),
            col_path: parse_path(&field(1)),
            row_label: field(2),
            kind,
            stat_label: field(4),
            raw_value: field(5),
            formatted: field(6),
            format: field(7),
        });
    }
    Ok(out)
}

pub fn read_ard_csv(path: impl AsRef<Path>) -> Result<Vec<ArdRecord>, ArdError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| ArdError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_ard(file)
}
