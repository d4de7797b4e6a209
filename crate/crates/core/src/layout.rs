//! Pre-data table layouts.
//!
//! A [`Layout`] declares column faceting, row faceting and the analyses to
//! run inside each facet without reference to any particular dataset. Every
//! builder method returns a new layout; the receiver is left unchanged, so
//! one layout can be reused across many builds.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::{AnalysisFunction, SummaryFunction};
use crate::dataset::{ColumnKind, DataError, Dataset, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("layout declares no analyses or group summaries")]
    NoAnalyses,
    #[error("summarize_row_groups({0}) needs a preceding split_rows_by")]
    NoRowSplit(String),
    #[error("analyze_colvars needs a split_cols_by_multivar in the column structure")]
    NoMultivarSplit,
    #[error("{0}")]
    Argument(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("unknown variable `{0}`")]
    MissingVariable(String),
    #[error("{0}")]
    Invalid(String),
}

impl From<DataError> for SplitError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::UnknownColumn(v) => SplitError::MissingVariable(v),
            other => SplitError::Invalid(other.to_string()),
        }
    }
}

/// One named subset produced by a split function.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Path token.
    pub name: String,
    pub label: String,
    pub data: Dataset,
    /// Column facets may redirect the analysis variable (multivariable
    /// column splits).
    pub var_override: Option<String>,
    pub is_reference: bool,
}

impl Facet {
    pub fn new(name: impl Into<String>, label: impl Into<String>, data: Dataset) -> Self {
        Facet {
            name: name.into(),
            label: label.into(),
            data,
            var_override: None,
            is_reference: false,
        }
    }
}

/// What a split function knows about where it is being applied.
#[derive(Debug, Clone, Copy)]
pub struct SplitContext<'a> {
    /// Variable named by the directive, if any.
    pub var: Option<&'a str>,
    pub row_path: &'a [String],
    pub col_path: &'a [String],
}

type SplitFn = dyn Fn(&Dataset, &SplitContext<'_>) -> Result<Vec<Facet>, SplitError> + Send + Sync;

/// Maps a dataset to an ordered list of facets. Facets need not be disjoint
/// nor cover the parent.
#[derive(Clone)]
pub struct SplitFunction {
    name: String,
    vars: Vec<String>,
    f: Arc<SplitFn>,
}

impl fmt::Debug for SplitFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitFunction")
            .field("name", &self.name)
            .field("vars", &self.vars)
            .finish_non_exhaustive()
    }
}

impl SplitFunction {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Dataset, &SplitContext<'_>) -> Result<Vec<Facet>, SplitError>
            + Send
            + Sync
            + 'static,
    {
        SplitFunction {
            name: name.into(),
            vars: Vec::new(),
            f: Arc::new(f),
        }
    }

    /// Declares variables the function reads, so builds can reject data
    /// lacking them up front.
    pub fn reading(mut self, vars: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.vars.extend(vars.into_iter().map(Into::into));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn apply(&self, data: &Dataset, ctx: &SplitContext<'_>) -> Result<Vec<Facet>, SplitError> {
        (self.f)(data, ctx)
    }
}

fn levels_of(data: &Dataset, var: &str) -> Result<Vec<String>, SplitError> {
    let col = data
        .column(var)
        .ok_or_else(|| SplitError::MissingVariable(var.to_string()))?;
    match col.kind() {
        ColumnKind::Categorical | ColumnKind::Boolean => {
            Ok(col.levels().into_iter().map(str::to_string).collect())
        }
        k => Err(SplitError::Invalid(format!(
            "cannot split on `{var}`: {k:?} variables have no levels"
        ))),
    }
}

/// One facet per level, in level order; nulls belong to no facet.
fn partition(data: &Dataset, var: &str) -> Result<Vec<Facet>, SplitError> {
    let levels = levels_of(data, var)?;
    let index: HashMap<&str, usize> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut masks = vec![vec![false; data.n_rows()]; levels.len()];
    let col = data.column(var).expect("checked above");
    for (i, v) in col.iter().enumerate() {
        if let Some(k) = v.key() {
            if let Some(&li) = index.get(k.as_str()) {
                masks[li][i] = true;
            }
        }
    }
    levels
        .iter()
        .zip(masks)
        .map(|(l, m)| Ok(Facet::new(l.clone(), l.clone(), data.filter_rows(&m)?)))
        .collect()
}

fn context_var<'a>(ctx: &SplitContext<'a>, fun: &str) -> Result<&'a str, SplitError> {
    ctx.var
        .ok_or_else(|| SplitError::Invalid(format!("{fun} needs the split variable")))
}

/// Partition by the levels of `var`.
pub fn partition_by_levels(var: impl Into<String>) -> SplitFunction {
    let var = var.into();
    SplitFunction::new("partition_by_levels", {
        let var = var.clone();
        move |data, _| partition(data, &var)
    })
    .reading([var])
}

/// Partition by the split variable, dropping empty facets and, inside each
/// facet, levels of `inner_var` that do not occur there.
pub fn trim_levels_in_group(inner_var: impl Into<String>) -> SplitFunction {
    let inner = inner_var.into();
    SplitFunction::new("trim_levels_in_group", {
        let inner = inner.clone();
        move |data, ctx| {
            let var = context_var(ctx, "trim_levels_in_group")?;
            levels_of(data, &inner)?;
            partition(data, var)?
                .into_iter()
                .filter(|f| f.data.n_rows() > 0)
                .map(|mut f| {
                    let col = f.data.column(&inner).expect("checked above");
                    let observed: HashSet<String> = col.keys().collect();
                    let kept: Vec<String> = col
                        .levels()
                        .into_iter()
                        .filter(|l| observed.contains(*l))
                        .map(str::to_string)
                        .collect();
                    if col.kind() == ColumnKind::Categorical {
                        f.data = f.data.with_levels(&inner, kept)?;
                    }
                    Ok(f)
                })
                .collect()
        }
    })
    .reading([inner])
}

/// An extra facet formed as the union of several levels.
#[derive(Debug, Clone, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
pub struct ComboLevel {
    /// Path token of the combined facet.
    pub valname: String,
    pub label: String,
    pub levelcombo: Vec<String>,
}

/// Partition by the split variable plus one union facet per combo. With
/// `keep_levels`, only those facet names survive, in that order.
pub fn add_combo_levels(combos: Vec<ComboLevel>, keep_levels: Option<Vec<String>>) -> SplitFunction {
    SplitFunction::new("add_combo_levels", move |data, ctx| {
        let var = context_var(ctx, "add_combo_levels")?;
        let mut facets = partition(data, var)?;
        let n_base = facets.len();
        for combo in &combos {
            if combo.levelcombo.is_empty() {
                return Err(SplitError::Invalid(format!(
                    "combo `{}` lists no levels",
                    combo.valname
                )));
            }
            let mut union: Option<Dataset> = None;
            for level in &combo.levelcombo {
                let part = facets[..n_base]
                    .iter()
                    .find(|f| &f.name == level)
                    .ok_or_else(|| {
                        SplitError::Invalid(format!(
                            "combo `{}` names `{level}`, which is not a level of `{var}`",
                            combo.valname
                        ))
                    })?;
                union = Some(match union {
                    None => part.data.clone(),
                    Some(u) => u.union(&part.data)?,
                });
            }
            facets.push(Facet::new(
                combo.valname.clone(),
                combo.label.clone(),
                union.expect("non-empty combo"),
            ));
        }
        match &keep_levels {
            None => Ok(facets),
            Some(keep) => keep
                .iter()
                .map(|k| {
                    facets
                        .iter()
                        .find(|f| &f.name == k)
                        .cloned()
                        .ok_or_else(|| SplitError::Invalid(format!("keep_levels names unknown facet `{k}`")))
                })
                .collect(),
        }
    })
}

/// Nearest-rank empirical quantile: the `ceil(p * n)`-th order statistic.
pub fn nearest_rank_quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

/// One facet per probability `p` holding the rows whose `var` is at most
/// the nearest-rank `p`-quantile of the incoming data. Facets nest.
pub fn cumulative_quantile_split(var: impl Into<String>, probabilities: Vec<f64>) -> SplitFunction {
    let var = var.into();
    SplitFunction::new("cumulative_quantile_split", {
        let var = var.clone();
        move |data, _| {
            if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(SplitError::Invalid(format!("probability {p} outside [0, 1]")));
            }
            let col = data
                .column(&var)
                .ok_or_else(|| SplitError::MissingVariable(var.clone()))?;
            if col.kind() != ColumnKind::Numeric {
                return Err(SplitError::Invalid(format!(
                    "cumulative quantiles need a numeric variable; `{var}` is {:?}",
                    col.kind()
                )));
            }
            let mut sorted: Vec<f64> = col.numbers().collect();
            sorted.sort_by(f64::total_cmp);
            probabilities
                .iter()
                .map(|&p| {
                    let name = quantile_name(p);
                    let facet = match nearest_rank_quantile(&sorted, p) {
                        Some(q) => data.filter_by(&var, |v| matches!(v, Value::Number(x) if *x <= q))?,
                        None => data.filter_rows(&vec![false; data.n_rows()])?,
                    };
                    Ok(Facet::new(name.clone(), name, facet))
                })
                .collect()
        }
    })
    .reading([var])
}

fn quantile_name(p: f64) -> String {
    format!("{}%", crate::format::round_half_away(p * 100.0, 2).trim_end_matches('0').trim_end_matches('.'))
}

/// Facets that each carry the whole dataset but redirect analyses to one
/// of `vars`.
fn multivar(vars: Vec<String>) -> SplitFunction {
    SplitFunction::new("multivar", {
        let vars = vars.clone();
        move |data, _| {
            vars.iter()
                .map(|v| {
                    let col = data
                        .column(v)
                        .ok_or_else(|| SplitError::MissingVariable(v.clone()))?;
                    let label = col.label().unwrap_or(v).to_string();
                    let mut f = Facet::new(v.clone(), label, data.clone());
                    f.var_override = Some(v.clone());
                    Ok(f)
                })
                .collect()
        }
    })
    .reading(vars)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    /// Facet labels show unless a group summary replaces them; analysis
    /// labels show when the analysis has an adjacent sibling analysis.
    #[default]
    Default,
    Visible,
    Hidden,
}

#[derive(Debug, Clone)]
pub struct ColSplit {
    pub(crate) var: Option<String>,
    pub(crate) split_name: String,
    pub(crate) split_fun: SplitFunction,
    pub(crate) ref_group: Option<String>,
}

impl ColSplit {
    pub fn new(var: impl Into<String>) -> Self {
        let var = var.into();
        ColSplit {
            split_name: var.clone(),
            split_fun: partition_by_levels(var.clone()),
            var: Some(var),
            ref_group: None,
        }
    }

    pub fn split_fun(mut self, f: SplitFunction) -> Self {
        self.split_fun = f;
        self
    }

    pub fn ref_group(mut self, level: impl Into<String>) -> Self {
        self.ref_group = Some(level.into());
        self
    }

    pub fn split_name(mut self, name: impl Into<String>) -> Self {
        self.split_name = name.into();
        self
    }

    pub fn var(&self) -> Option<&str> {
        self.var.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.split_name
    }

    pub fn function(&self) -> &SplitFunction {
        &self.split_fun
    }

    pub fn reference_level(&self) -> Option<&str> {
        self.ref_group.as_deref()
    }

    pub(crate) fn describe(&self) -> String {
        match &self.var {
            Some(v) => format!("split_cols_by({v})"),
            None => format!("split_cols_by_multivar({})", self.split_fun.vars().join(", ")),
        }
    }
}

impl From<&str> for ColSplit {
    fn from(var: &str) -> Self {
        ColSplit::new(var)
    }
}

#[derive(Debug, Clone)]
pub struct ContentDirective {
    pub var: String,
    pub cfun: SummaryFunction,
}

#[derive(Debug, Clone)]
pub struct RowSplit {
    pub(crate) var: String,
    pub(crate) split_name: String,
    pub(crate) split_fun: SplitFunction,
    pub(crate) child_labels: Visibility,
    pub(crate) indent_mod: i32,
    pub(crate) content: Option<ContentDirective>,
}

impl RowSplit {
    pub fn new(var: impl Into<String>) -> Self {
        let var = var.into();
        RowSplit {
            split_name: var.clone(),
            split_fun: partition_by_levels(var.clone()),
            var,
            child_labels: Visibility::Default,
            indent_mod: 0,
            content: None,
        }
    }

    pub fn split_fun(mut self, f: SplitFunction) -> Self {
        self.split_fun = f;
        self
    }

    pub fn child_labels(mut self, v: Visibility) -> Self {
        self.child_labels = v;
        self
    }

    pub fn indent_mod(mut self, m: i32) -> Self {
        self.indent_mod = m;
        self
    }

    pub fn split_name(mut self, name: impl Into<String>) -> Self {
        self.split_name = name.into();
        self
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn name(&self) -> &str {
        &self.split_name
    }

    pub fn function(&self) -> &SplitFunction {
        &self.split_fun
    }

    pub fn content(&self) -> Option<&ContentDirective> {
        self.content.as_ref()
    }

    pub(crate) fn describe(&self) -> String {
        format!("split_rows_by({})", self.var)
    }
}

impl From<&str> for RowSplit {
    fn from(var: &str) -> Self {
        RowSplit::new(var)
    }
}

/// Which variable an analysis reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnalysisVar {
    Column(String),
    /// Resolved per leaf column from a multivariable column split.
    PerColumn,
}

#[derive(Debug, Clone)]
pub struct Analyze {
    pub(crate) var: AnalysisVar,
    pub(crate) afun: AnalysisFunction,
    pub(crate) show_labels: Visibility,
    pub(crate) var_label: Option<String>,
    pub(crate) indent_mod: i32,
    pub(crate) name: Option<String>,
}

impl Analyze {
    pub fn new(var: impl Into<String>, afun: AnalysisFunction) -> Self {
        Analyze {
            var: AnalysisVar::Column(var.into()),
            afun,
            show_labels: Visibility::Default,
            var_label: None,
            indent_mod: 0,
            name: None,
        }
    }

    pub fn colvars(afun: AnalysisFunction) -> Self {
        Analyze {
            var: AnalysisVar::PerColumn,
            ..Analyze::new("", afun)
        }
    }

    pub fn show_labels(mut self, v: Visibility) -> Self {
        self.show_labels = v;
        self
    }

    pub fn var_label(mut self, label: impl Into<String>) -> Self {
        self.var_label = Some(label.into());
        self
    }

    pub fn indent_mod(mut self, m: i32) -> Self {
        self.indent_mod = m;
        self
    }

    /// Path token; defaults to the variable name (`colvars` for per-column
    /// analyses).
    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn var(&self) -> &AnalysisVar {
        &self.var
    }

    pub fn function(&self) -> &AnalysisFunction {
        &self.afun
    }

    pub fn path_name(&self) -> String {
        match (&self.name, &self.var) {
            (Some(n), _) => n.clone(),
            (None, AnalysisVar::Column(v)) => v.clone(),
            (None, AnalysisVar::PerColumn) => "colvars".to_string(),
        }
    }

    pub(crate) fn describe(&self) -> String {
        match &self.var {
            AnalysisVar::Column(v) => format!("analyze({v})"),
            AnalysisVar::PerColumn => "analyze_colvars".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum RowDirective {
    Split(RowSplit),
    Analyze(Analyze),
}

#[derive(Debug, Clone, Default)]
pub struct Layout {
    col_splits: Vec<ColSplit>,
    overall_cols: Vec<String>,
    row_program: Vec<RowDirective>,
    show_colcounts: bool,
}

impl Layout {
    pub fn basic_table(show_colcounts: bool) -> Self {
        Layout {
            show_colcounts,
            ..Layout::default()
        }
    }

    pub fn col_splits(&self) -> &[ColSplit] {
        &self.col_splits
    }

    pub fn overall_cols(&self) -> &[String] {
        &self.overall_cols
    }

    pub fn row_program(&self) -> &[RowDirective] {
        &self.row_program
    }

    pub fn show_colcounts(&self) -> bool {
        self.show_colcounts
    }

    /// Nests a further column split inside all previous ones.
    pub fn split_cols_by(&self, split: impl Into<ColSplit>) -> Layout {
        let mut out = self.clone();
        out.col_splits.push(split.into());
        out
    }

    pub fn split_cols_by_multivar<S: AsRef<str>>(&self, vars: &[S]) -> Result<Layout, LayoutError> {
        if vars.is_empty() {
            return Err(LayoutError::Argument(
                "split_cols_by_multivar needs at least one variable".into(),
            ));
        }
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let mut out = self.clone();
        out.col_splits.push(ColSplit {
            var: None,
            split_name: "multivars".into(),
            split_fun: multivar(vars),
            ref_group: None,
        });
        Ok(out)
    }

    /// Adds a top-level column holding every row, after the split columns.
    pub fn add_overall_col(&self, label: impl Into<String>) -> Layout {
        let mut out = self.clone();
        out.overall_cols.push(label.into());
        out
    }

    /// Nests a row split one level below the previous row split.
    pub fn split_rows_by(&self, split: impl Into<RowSplit>) -> Layout {
        let mut out = self.clone();
        out.row_program.push(RowDirective::Split(split.into()));
        out
    }

    pub fn analyze(&self, analysis: Analyze) -> Layout {
        let mut out = self.clone();
        out.row_program.push(RowDirective::Analyze(analysis));
        out
    }

    pub fn analyze_colvars(&self, afun: AnalysisFunction) -> Layout {
        self.analyze(Analyze::colvars(afun))
    }

    /// Attaches group summary rows to the most recent row split.
    pub fn summarize_row_groups(
        &self,
        var: impl Into<String>,
        cfun: SummaryFunction,
    ) -> Result<Layout, LayoutError> {
        let var = var.into();
        let mut out = self.clone();
        let split = out
            .row_program
            .iter_mut()
            .rev()
            .find_map(|d| match d {
                RowDirective::Split(s) => Some(s),
                RowDirective::Analyze(_) => None,
            })
            .ok_or_else(|| LayoutError::NoRowSplit(var.clone()))?;
        split.content = Some(ContentDirective { var, cfun });
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        let any = self.row_program.iter().any(|d| match d {
            RowDirective::Analyze(_) => true,
            RowDirective::Split(s) => s.content.is_some(),
        });
        if any {
            Ok(())
        } else {
            Err(LayoutError::NoAnalyses)
        }
    }

    pub fn uses_colvars(&self) -> bool {
        self.row_program
            .iter()
            .any(|d| matches!(d, RowDirective::Analyze(a) if a.var == AnalysisVar::PerColumn))
    }
}
