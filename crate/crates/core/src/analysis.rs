//! Analysis and summary functions, and the vertical cell groups they return.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::dataset::{ColumnKind, ColumnSlice, Dataset};
use crate::format::CellValue;

/// Everything an analysis function may look at besides the variable slice.
#[derive(Debug, Clone, Copy)]
pub struct FacetContext<'a> {
    /// Path of the row facet being analyzed.
    pub row_path: &'a [String],
    /// Path of the leaf column.
    pub col_path: &'a [String],
    /// Rows in both the row facet and the column facet.
    pub data: &'a Dataset,
    /// The reference column's rows within the same row facet, when an
    /// enclosing column split declared a reference group.
    pub reference_data: Option<&'a Dataset>,
    pub in_reference_column: bool,
    pub analysis_var: &'a str,
    /// Column count ("N") of the leaf column.
    pub col_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VcgRow {
    /// Path token; defaults to the label.
    pub name: String,
    pub label: String,
    pub value: CellValue,
    pub format: String,
}

/// One analysis' cells for one table column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vcg {
    pub rows: Vec<VcgRow>,
}

impl Vcg {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(
        mut self,
        label: impl Into<String>,
        value: impl Into<CellValue>,
        format: impl Into<String>,
    ) -> Self {
        let label = label.into();
        self.rows.push(VcgRow {
            name: label.clone(),
            label,
            value: value.into(),
            format: format.into(),
        });
        self
    }

    pub fn named_row(
        mut self,
        name: impl Into<String>,
        label: impl Into<String>,
        value: impl Into<CellValue>,
        format: impl Into<String>,
    ) -> Self {
        self.rows.push(VcgRow {
            name: name.into(),
            label: label.into(),
            value: value.into(),
            format: format.into(),
        });
        self
    }

    pub fn blank_row(self, label: impl Into<String>, format: impl Into<String>) -> Self {
        self.row(label, CellValue::Blank, format)
    }

    pub fn extend(mut self, other: Vcg) -> Self {
        self.rows.extend(other.rows);
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

type AnalysisFn =
    dyn Fn(&ColumnSlice<'_>, &FacetContext<'_>) -> Result<Vcg, String> + Send + Sync;

/// A named, pure function from a facet's variable slice to a [`Vcg`].
#[derive(Clone)]
pub struct AnalysisFunction {
    name: String,
    f: Arc<AnalysisFn>,
}

/// Summary (content) functions share the analysis signature.
pub type SummaryFunction = AnalysisFunction;

impl AnalysisFunction {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&ColumnSlice<'_>, &FacetContext<'_>) -> Result<Vcg, String> + Send + Sync + 'static,
    {
        AnalysisFunction {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn call(&self, values: &ColumnSlice<'_>, ctx: &FacetContext<'_>) -> Result<Vcg, String> {
        (self.f)(values, ctx)
    }

    /// Runs each function in turn and concatenates their rows.
    pub fn combine(fns: Vec<AnalysisFunction>) -> AnalysisFunction {
        let name = fns
            .iter()
            .map(|f| f.name.as_str())
            .collect::<Vec<_>>()
            .join("+");
        AnalysisFunction::new(name, move |x, ctx| {
            let mut out = Vcg::new();
            for f in &fns {
                out = out.extend(f.call(x, ctx)?);
            }
            Ok(out)
        })
    }
}

impl fmt::Debug for AnalysisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalysisFunction")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Functions available by name in layout files.
pub mod builtins {
    use super::*;

    pub const NAMES: &[&str] = &[
        "counts",
        "count_pct",
        "mean_sd",
        "min_max",
        "distinct_count",
        "events_patients",
        "n_pct_of_column",
    ];

    /// Optional parameters a layout file may pass alongside a function name.
    #[derive(Debug, Clone, Default)]
    pub struct Params {
        /// For `counts`: count distinct values of this column per level
        /// instead of rows.
        pub id_var: Option<String>,
    }

    pub fn by_name(name: &str, params: &Params) -> Option<AnalysisFunction> {
        Some(match name {
            "counts" => match &params.id_var {
                Some(id) => counts_unique(id),
                None => counts(),
            },
            "count_pct" => count_pct(),
            "mean_sd" => mean_sd(),
            "min_max" => min_max(),
            "distinct_count" => distinct_count(),
            "events_patients" => events_patients(),
            "n_pct_of_column" => n_pct_of_column(),
            _ => return None,
        })
    }

    fn require_levels(x: &ColumnSlice<'_>) -> Result<Vec<String>, String> {
        match x.kind() {
            ColumnKind::Categorical | ColumnKind::Boolean => {
                Ok(x.levels().into_iter().map(str::to_string).collect())
            }
            k => Err(format!(
                "`{}` is {k:?}; a categorical variable is required",
                x.name()
            )),
        }
    }

    fn require_numeric(x: &ColumnSlice<'_>) -> Result<Vec<f64>, String> {
        if x.kind() != ColumnKind::Numeric {
            return Err(format!(
                "`{}` is {:?}; a numeric variable is required",
                x.name(),
                x.kind()
            ));
        }
        Ok(x.numbers().collect())
    }

    fn level_counts(x: &ColumnSlice<'_>) -> Result<Vec<(String, usize)>, String> {
        let levels = require_levels(x)?;
        let mut counts: HashMap<String, usize> = HashMap::new();
        for k in x.keys() {
            *counts.entry(k).or_default() += 1;
        }
        Ok(levels
            .into_iter()
            .map(|l| {
                let n = counts.get(&l).copied().unwrap_or(0);
                (l, n)
            })
            .collect())
    }

    fn proportion(n: usize, of: usize) -> f64 {
        if of == 0 {
            0.0
        } else {
            n as f64 / of as f64
        }
    }

    /// One row per level with its row count.
    pub fn counts() -> AnalysisFunction {
        AnalysisFunction::new("counts", |x, _| {
            Ok(level_counts(x)?
                .into_iter()
                .fold(Vcg::new(), |v, (l, n)| v.row(l, n, "xx")))
        })
    }

    /// One row per level with the number of distinct `id_var` values among
    /// rows at that level.
    pub fn counts_unique(id_var: &str) -> AnalysisFunction {
        let id_var = id_var.to_string();
        AnalysisFunction::new(format!("counts[{id_var}]"), move |x, ctx| {
            let levels = require_levels(x)?;
            let ids = ctx
                .data
                .column(&id_var)
                .ok_or_else(|| format!("unknown id column `{id_var}`"))?;
            let mut seen: HashMap<String, HashSet<String>> = HashMap::new();
            for (v, id) in x.iter().zip(ids.iter()) {
                if let (Some(k), Some(id)) = (v.key(), id.key()) {
                    seen.entry(k).or_default().insert(id);
                }
            }
            Ok(levels.into_iter().fold(Vcg::new(), |v, l| {
                let n = seen.get(&l).map_or(0, HashSet::len);
                v.row(l, n, "xx")
            }))
        })
    }

    /// One row per level: count and proportion of the column count.
    pub fn count_pct() -> AnalysisFunction {
        AnalysisFunction::new("count_pct", |x, ctx| {
            Ok(level_counts(x)?.into_iter().fold(Vcg::new(), |v, (l, n)| {
                v.row(
                    l,
                    vec![n as f64, proportion(n, ctx.col_count)],
                    "xx (xx.x%)",
                )
            }))
        })
    }

    pub fn mean(values: &[f64]) -> f64 {
        if values.is_empty() {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    }

    /// Sample standard deviation; NaN below two observations.
    pub fn sd(values: &[f64]) -> f64 {
        if values.len() < 2 {
            return f64::NAN;
        }
        let m = mean(values);
        let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (values.len() - 1) as f64).sqrt()
    }

    pub fn mean_sd() -> AnalysisFunction {
        AnalysisFunction::new("mean_sd", |x, _| {
            let v = require_numeric(x)?;
            Ok(Vcg::new()
                .row("Mean", mean(&v), "xx.x")
                .row("sd", sd(&v), "xx.x"))
        })
    }

    pub fn min_max() -> AnalysisFunction {
        AnalysisFunction::new("min_max", |x, _| {
            let v = require_numeric(x)?;
            let (lo, hi) = if v.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                })
            };
            Ok(Vcg::new().row("Min - Max", vec![lo, hi], "xx.x - xx.x"))
        })
    }

    pub fn distinct_count() -> AnalysisFunction {
        AnalysisFunction::new("distinct_count", |x, _| {
            Ok(Vcg::new().row("n", x.distinct_count(), "xx"))
        })
    }

    /// Distinct values of the variable (subjects) with their share of the
    /// column count, and the number of non-null rows (events).
    pub fn events_patients() -> AnalysisFunction {
        AnalysisFunction::new("events_patients", |x, ctx| {
            let patients = x.distinct_count();
            Ok(Vcg::new()
                .row(
                    "Patients with at least one event",
                    vec![patients as f64, proportion(patients, ctx.col_count)],
                    "xx (xx.xx%)",
                )
                .row("Total events", x.non_null_count(), "xx"))
        })
    }

    pub fn n_pct_of_column() -> AnalysisFunction {
        AnalysisFunction::new("n_pct_of_column", |x, ctx| {
            let n = x.non_null_count();
            Ok(Vcg::new().row(
                "n",
                vec![n as f64, proportion(n, ctx.col_count)],
                "xx (xx.x%)",
            ))
        })
    }
}
