//! Declarative tabulation.
//!
//! A [`Layout`] describes a table without reference to data: how columns
//! and rows are faceted, and which analyses fill each facet. Building the
//! layout against a [`Dataset`] yields a [`TableTree`], which can be
//! queried and rearranged by path, rendered as text, or exported as
//! long-form analysis records.
//!
//! ```
//! use tabula::{build_table, builtins, read_csv_str, render_text, Analyze, Layout, RenderOptions};
//!
//! let data = read_csv_str("arm,sex\nA,F\nA,M\nB,F\n", None).unwrap();
//! let layout = Layout::basic_table(true)
//!     .split_cols_by("arm")
//!     .analyze(Analyze::new("sex", builtins::counts()));
//! let table = build_table(&layout, &data).unwrap();
//! print!("{}", render_text(&table, &RenderOptions::default()));
//! ```

pub mod analysis;
pub mod ard;
pub mod dataset;
pub mod engine;
pub mod format;
pub mod layout;
pub mod layout_file;
pub mod render;
pub mod table;

pub use analysis::{builtins, AnalysisFunction, FacetContext, SummaryFunction, Vcg, VcgRow};
pub use ard::{as_ard, as_ard_with, read_ard, read_ard_csv, write_ard, write_ard_csv, ArdError, ArdRecord};
pub use dataset::{
    read_csv, read_csv_from, read_csv_str, write_csv, Column, ColumnKind, ColumnSlice, ColumnSpec,
    DataError, Dataset, Schema, Value,
};
pub use engine::{build_table, build_table_with, BuildError, BuildOptions};
pub use format::{apply_format, parse_format, CellValue, FormatError, FormatParseError, FormatSpec};
pub use layout::{
    add_combo_levels, cumulative_quantile_split, partition_by_levels, trim_levels_in_group, Analyze,
    ColSplit, ComboLevel, Facet, Layout, LayoutError, RowSplit, SplitContext, SplitError,
    SplitFunction, Visibility,
};
pub use layout_file::{load_layout, parse_layout, LayoutFileError};
pub use render::{compute_column_layout, render_text, ColumnLayout, RenderOptions};
pub use table::{
    column_score, join_path, parse_path, Cell, DataRow, InsertPosition, PathError, RowKind,
    SortItem, TableError, TableNode, TableTree,
};
