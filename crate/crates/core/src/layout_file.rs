//! Layouts declared as JSON: an array of directive records, one per
//! builder call, e.g.
//!
//! ```json
//! [
//!   {"op": "basic_table", "show_colcounts": true},
//!   {"op": "split_cols_by", "var": "ARM"},
//!   {"op": "analyze", "var": "AGE", "afun": "mean_sd"}
//! ]
//! ```
//!
//! Analysis functions come from [`builtins`] only.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{builtins, AnalysisFunction};
use crate::layout::{
    add_combo_levels, cumulative_quantile_split, partition_by_levels, trim_levels_in_group, Analyze,
    ColSplit, ComboLevel, Layout, LayoutError, RowSplit, SplitFunction, Visibility,
};

#[derive(Debug, Error)]
pub enum LayoutFileError {
    #[error("cannot read layout {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid layout file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("directive {index}: unknown analysis function `{name}` (available: {})", builtins::NAMES.join(", "))]
    UnknownFunction { index: usize, name: String },
    #[error("directive {index}: basic_table must be the first directive")]
    MisplacedBasicTable { index: usize },
    #[error("directive {index}: {source}")]
    Layout {
        index: usize,
        #[source]
        source: LayoutError,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AfunSpec {
    One(String),
    /// Functions run in turn; their rows are concatenated.
    Many(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitFunSpec {
    PartitionByLevels,
    TrimLevelsInGroup {
        inner_var: String,
    },
    AddComboLevels {
        combos: Vec<ComboLevel>,
        #[serde(default)]
        keep_levels: Option<Vec<String>>,
    },
    CumulativeQuantile {
        probabilities: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Directive {
    BasicTable {
        #[serde(default)]
        show_colcounts: bool,
    },
    SplitColsBy {
        var: String,
        #[serde(default)]
        split_fun: Option<SplitFunSpec>,
        #[serde(default)]
        ref_group: Option<String>,
        #[serde(default)]
        split_name: Option<String>,
    },
    SplitColsByMultivar {
        vars: Vec<String>,
    },
    AddOverallCol {
        label: String,
    },
    SplitRowsBy {
        var: String,
        #[serde(default)]
        split_fun: Option<SplitFunSpec>,
        #[serde(default)]
        child_labels: Visibility,
        #[serde(default)]
        indent_mod: i32,
        #[serde(default)]
        split_name: Option<String>,
    },
    SummarizeRowGroups {
        var: String,
        cfun: AfunSpec,
        #[serde(default)]
        id_var: Option<String>,
    },
    Analyze {
        var: String,
        afun: AfunSpec,
        #[serde(default)]
        show_labels: Visibility,
        #[serde(default)]
        var_label: Option<String>,
        #[serde(default)]
        indent_mod: i32,
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        id_var: Option<String>,
    },
    AnalyzeColvars {
        afun: AfunSpec,
    },
}

fn split_fun(var: &str, spec: Option<SplitFunSpec>) -> SplitFunction {
    match spec {
        None | Some(SplitFunSpec::PartitionByLevels) => partition_by_levels(var),
        Some(SplitFunSpec::TrimLevelsInGroup { inner_var }) => trim_levels_in_group(inner_var),
        Some(SplitFunSpec::AddComboLevels { combos, keep_levels }) => add_combo_levels(combos, keep_levels),
        Some(SplitFunSpec::CumulativeQuantile { probabilities }) => cumulative_quantile_split(var, probabilities),
    }
}

fn afun(index: usize, spec: &AfunSpec, id_var: Option<String>) -> Result<AnalysisFunction, LayoutFileError> {
    let params = builtins::Params { id_var };
    let lookup = |name: &String| {
        builtins::by_name(name, &params).ok_or_else(|| LayoutFileError::UnknownFunction {
            index,
            name: name.clone(),
        })
    };
    match spec {
        AfunSpec::One(name) => lookup(name),
        AfunSpec::Many(names) => Ok(AnalysisFunction::combine(
            names.iter().map(lookup).collect::<Result<_, _>>()?,
        )),
    }
}

pub fn layout_from_directives(directives: Vec<Directive>) -> Result<Layout, LayoutFileError> {
    let mut layout = Layout::basic_table(false);
    for (index, d) in directives.into_iter().enumerate() {
        let wrap = |source| LayoutFileError::Layout { index, source };
        layout = match d {
            Directive::BasicTable { show_colcounts } => {
                if index != 0 {
                    return Err(LayoutFileError::MisplacedBasicTable { index });
                }
                Layout::basic_table(show_colcounts)
            }
            Directive::SplitColsBy {
                var,
                split_fun: f,
                ref_group,
                split_name,
            } => {
                let mut s = ColSplit::new(var.clone()).split_fun(split_fun(&var, f));
                if let Some(r) = ref_group {
                    s = s.ref_group(r);
                }
                if let Some(n) = split_name {
                    s = s.split_name(n);
                }
                layout.split_cols_by(s)
            }
            Directive::SplitColsByMultivar { vars } => layout.split_cols_by_multivar(&vars).map_err(wrap)?,
            Directive::AddOverallCol { label } => layout.add_overall_col(label),
            Directive::SplitRowsBy {
                var,
                split_fun: f,
                child_labels,
                indent_mod,
                split_name,
            } => {
                let mut s = RowSplit::new(var.clone())
                    .split_fun(split_fun(&var, f))
                    .child_labels(child_labels)
                    .indent_mod(indent_mod);
                if let Some(n) = split_name {
                    s = s.split_name(n);
                }
                layout.split_rows_by(s)
            }
            Directive::SummarizeRowGroups { var, cfun, id_var } => layout
                .summarize_row_groups(var, afun(index, &cfun, id_var)?)
                .map_err(wrap)?,
            Directive::Analyze {
                var,
                afun: f,
                show_labels,
                var_label,
                indent_mod,
                name,
                id_var,
            } => {
                let mut a = Analyze::new(var, afun(index, &f, id_var)?)
                    .show_labels(show_labels)
                    .indent_mod(indent_mod);
                if let Some(l) = var_label {
                    a = a.var_label(l);
                }
                if let Some(n) = name {
                    a = a.name(n);
                }
                layout.analyze(a)
            }
            Directive::AnalyzeColvars { afun: f } => layout.analyze_colvars(afun(index, &f, None)?),
        };
    }
    Ok(layout)
}

pub fn parse_layout(text: &str) -> Result<Layout, LayoutFileError> {
    layout_from_directives(serde_json::from_str(text)?)
}

pub fn load_layout(path: impl AsRef<Path>) -> Result<Layout, LayoutFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LayoutFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_layout(&text)
}
