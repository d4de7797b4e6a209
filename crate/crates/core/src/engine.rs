//! Applies a [`Layout`] to a [`Dataset`] to produce a [`TableTree`].

// Errors carry full path context and only occur once per build.
#![allow(clippy::result_large_err)]

use std::collections::HashSet;

use thiserror::Error;

use crate::analysis::{AnalysisFunction, FacetContext};
use crate::dataset::Dataset;
use crate::format::parse_format;
use crate::layout::{
    AnalysisVar, Analyze, ColSplit, Layout, LayoutError, RowDirective, RowSplit, SplitContext,
    SplitError, Visibility,
};
use crate::table::{
    join_path, Cell, ColumnNode, ColumnTree, DataRow, ElementaryTable, RowKind, Subtable,
    SubtableKind, TableNode, TableTree,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("{directive}: variable `{var}` not found in {dataset}")]
    MissingVariable {
        directive: String,
        var: String,
        dataset: String,
    },
    #[error("{split}: reference group `{level}` is not among its facets ({})", available.join(", "))]
    RefGroupMissing {
        split: String,
        level: String,
        available: Vec<String>,
    },
    #[error("{split}: duplicate facet `{name}` under `{path}`")]
    DuplicateFacet {
        split: String,
        name: String,
        path: String,
    },
    #[error("{split} at `{path}`: {message}")]
    Split {
        split: String,
        path: String,
        message: String,
    },
    #[error("analysis `{analysis}` failed at row `{row_path}`, column `{col_path}`: {message}")]
    Analysis {
        analysis: String,
        row_path: String,
        col_path: String,
        message: String,
    },
    #[error("analysis `{analysis}` at row `{row_path}` returns rows {left_rows:?} in column `{left}` but {right_rows:?} in column `{right}`")]
    LabelMismatch {
        analysis: String,
        row_path: String,
        left: String,
        right: String,
        left_rows: Vec<String>,
        right_rows: Vec<String>,
    },
    #[error("analysis `{analysis}` at row `{row_path}`, column `{col_path}` returns row `{name}` twice")]
    DuplicateRowLabel {
        analysis: String,
        row_path: String,
        col_path: String,
        name: String,
    },
    #[error("analysis `{analysis}` at row `{row_path}`, column `{col_path}`: {message}")]
    Format {
        analysis: String,
        row_path: String,
        col_path: String,
        message: String,
    },
    #[error("two siblings named `{name}` under `{path}`")]
    DuplicateName { path: String, name: String },
    #[error("top-level column `{0}` is declared twice")]
    DuplicateColumn(String),
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions<'a> {
    /// Dataset used only for column counts.
    pub alt_counts: Option<&'a Dataset>,
    pub hsep: char,
}

impl Default for BuildOptions<'_> {
    fn default() -> Self {
        BuildOptions {
            alt_counts: None,
            hsep: '-',
        }
    }
}

pub fn build_table(layout: &Layout, data: &Dataset) -> Result<TableTree, BuildError> {
    build_table_with(layout, data, &BuildOptions::default())
}

pub fn build_table_with(
    layout: &Layout,
    data: &Dataset,
    options: &BuildOptions<'_>,
) -> Result<TableTree, BuildError> {
    layout.validate()?;
    check_variables(layout, data, "data", true)?;
    if let Some(alt) = options.alt_counts {
        check_variables(layout, alt, "alt_counts", false)?;
    }
    let has_override = layout.col_splits().iter().any(|s| s.var().is_none());
    if layout.uses_colvars() && !has_override {
        return Err(LayoutError::NoMultivarSplit.into());
    }

    let mut leaves = Vec::new();
    let mut nodes = build_columns(layout.col_splits(), data, &mut Vec::new(), &ColInherit::default(), &mut leaves)?;
    if let Some(alt) = options.alt_counts {
        let mut alt_leaves = Vec::new();
        let alt_nodes = build_columns(layout.col_splits(), alt, &mut Vec::new(), &ColInherit::default(), &mut alt_leaves)?;
        apply_alt_counts(&mut nodes, &alt_nodes);
    }
    let mut top: HashSet<String> = nodes
        .iter()
        .flat_map(|n| [n.split_name.clone().unwrap_or_default(), n.label.clone()])
        .collect();
    let count_all = options.alt_counts.unwrap_or(data).n_rows();
    for label in layout.overall_cols() {
        if !top.insert(label.clone()) {
            return Err(BuildError::DuplicateColumn(label.clone()));
        }
        nodes.push(overall_node(label, count_all));
        leaves.push(Leaf::overall(label, data));
    }
    if nodes.is_empty() {
        nodes.push(overall_node("all", count_all));
        leaves.push(Leaf::overall("all", data));
    }
    for (leaf, node) in leaves.iter_mut().zip(leaf_nodes(&nodes)) {
        leaf.count = node.count;
    }

    let builder = RowBuilder { leaves: &leaves };
    let mut body = Subtable::new(SubtableKind::Root, "root", "");
    body.children = builder.build_level(layout.row_program(), data, &[])?;
    let columns = ColumnTree {
        nodes,
        show_colcounts: layout.show_colcounts(),
    };
    Ok(TableTree::new(columns, body, options.hsep).expect("builder emits one cell per column"))
}

fn missing(directive: String, var: &str, dataset: &str) -> BuildError {
    BuildError::MissingVariable {
        directive,
        var: var.to_string(),
        dataset: dataset.to_string(),
    }
}

fn check_variables(layout: &Layout, data: &Dataset, which: &str, rows_too: bool) -> Result<(), BuildError> {
    for s in layout.col_splits() {
        for v in s.var().into_iter().chain(s.function().vars().iter().map(String::as_str)) {
            if !data.has_column(v) {
                return Err(missing(s.describe(), v, which));
            }
        }
    }
    if !rows_too {
        return Ok(());
    }
    for d in layout.row_program() {
        match d {
            RowDirective::Split(s) => {
                let vars = std::iter::once(s.var())
                    .chain(s.function().vars().iter().map(String::as_str))
                    .chain(s.content().map(|c| c.var.as_str()));
                for v in vars {
                    if !data.has_column(v) {
                        return Err(missing(s.describe(), v, which));
                    }
                }
            }
            RowDirective::Analyze(a) => {
                if let AnalysisVar::Column(v) = a.var() {
                    if !data.has_column(v) {
                        return Err(missing(a.describe(), v, which));
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
struct ColInherit {
    var_override: Option<String>,
    reference: Option<Dataset>,
    in_reference: bool,
}

struct Leaf {
    path: Vec<String>,
    data: Dataset,
    inherit: ColInherit,
    count: usize,
}

impl Leaf {
    fn overall(label: &str, data: &Dataset) -> Leaf {
        Leaf {
            path: vec![label.to_string()],
            data: data.clone(),
            inherit: ColInherit::default(),
            count: data.n_rows(),
        }
    }
}

fn overall_node(label: &str, count: usize) -> ColumnNode {
    ColumnNode {
        split_name: None,
        name: label.to_string(),
        label: label.to_string(),
        count,
        is_reference: false,
        var_override: None,
        children: Vec::new(),
    }
}

fn leaf_nodes(nodes: &[ColumnNode]) -> Vec<&ColumnNode> {
    fn walk<'a>(n: &'a ColumnNode, out: &mut Vec<&'a ColumnNode>) {
        if n.children.is_empty() {
            out.push(n);
        }
        for c in &n.children {
            walk(c, out);
        }
    }
    let mut out = Vec::new();
    for n in nodes {
        walk(n, &mut out);
    }
    out
}

fn split_error(split: String, path: &[String], e: SplitError, which: &str) -> BuildError {
    match e {
        SplitError::MissingVariable(v) => missing(split, &v, which),
        SplitError::Invalid(message) => BuildError::Split {
            split,
            path: join_path(path),
            message,
        },
    }
}

fn check_unique<'a>(names: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    let mut seen = HashSet::new();
    names.into_iter().find(|n| !seen.insert(*n))
}

fn build_columns(
    splits: &[ColSplit],
    data: &Dataset,
    path: &mut Vec<String>,
    inherit: &ColInherit,
    leaves: &mut Vec<Leaf>,
) -> Result<Vec<ColumnNode>, BuildError> {
    let Some((split, rest)) = splits.split_first() else {
        return Ok(Vec::new());
    };
    let ctx = SplitContext {
        var: split.var(),
        row_path: &[],
        col_path: path,
    };
    let mut facets = split
        .function()
        .apply(data, &ctx)
        .map_err(|e| split_error(split.describe(), path, e, "data"))?;
    if let Some(dup) = check_unique(facets.iter().map(|f| f.name.as_str())) {
        return Err(BuildError::DuplicateFacet {
            split: split.describe(),
            name: dup.to_string(),
            path: join_path(path),
        });
    }
    let mut reference = None;
    if let Some(level) = split.reference_level() {
        let Some(i) = facets.iter().position(|f| f.name == level) else {
            return Err(BuildError::RefGroupMissing {
                split: split.describe(),
                level: level.to_string(),
                available: facets.iter().map(|f| f.name.clone()).collect(),
            });
        };
        let f = &mut facets[i];
        f.is_reference = true;
        reference = Some(f.data.clone());
    }
    let mut nodes = Vec::with_capacity(facets.len());
    for f in facets {
        path.push(split.name().to_string());
        path.push(f.name.clone());
        let child_inherit = ColInherit {
            var_override: f.var_override.clone().or_else(|| inherit.var_override.clone()),
            reference: reference.clone().or_else(|| inherit.reference.clone()),
            in_reference: if reference.is_some() { f.is_reference } else { inherit.in_reference },
        };
        let children = build_columns(rest, &f.data, path, &child_inherit, leaves)?;
        if rest.is_empty() {
            leaves.push(Leaf {
                path: path.clone(),
                data: f.data.clone(),
                inherit: child_inherit.clone(),
                count: f.data.n_rows(),
            });
        }
        path.truncate(path.len() - 2);
        if !rest.is_empty() && children.is_empty() {
            // Nothing below this facet, so it contributes no columns.
            continue;
        }
        nodes.push(ColumnNode {
            split_name: Some(split.name().to_string()),
            name: f.name,
            label: f.label,
            count: f.data.n_rows(),
            is_reference: f.is_reference,
            var_override: f.var_override,
            children,
        });
    }
    Ok(nodes)
}

/// Copies counts from the same-path nodes of a tree built on the alt
/// dataset; paths absent there count zero.
fn apply_alt_counts(nodes: &mut [ColumnNode], alt: &[ColumnNode]) {
    for n in nodes {
        match alt.iter().find(|a| a.split_name == n.split_name && a.name == n.name) {
            Some(a) => {
                n.count = a.count;
                apply_alt_counts(&mut n.children, &a.children);
            }
            None => {
                n.count = 0;
                apply_alt_counts(&mut n.children, &[]);
            }
        }
    }
}

struct RowBuilder<'a> {
    leaves: &'a [Leaf],
}

impl RowBuilder<'_> {
    /// One nesting level of the row program: leading analyses, then at
    /// most one split that takes the rest of the program into its facets.
    fn build_level(&self, program: &[RowDirective], data: &Dataset, row_path: &[String]) -> Result<Vec<TableNode>, BuildError> {
        let mut children: Vec<TableNode> = Vec::new();
        for (i, d) in program.iter().enumerate() {
            match d {
                RowDirective::Analyze(a) => {
                    let adjacent = [i.checked_sub(1), Some(i + 1)]
                        .into_iter()
                        .flatten()
                        .any(|j| matches!(program.get(j), Some(RowDirective::Analyze(_))));
                    children.push(self.analysis_table(a, adjacent, data, row_path)?);
                }
                RowDirective::Split(s) => {
                    children.push(self.split_table(s, &program[i + 1..], data, row_path)?);
                    break;
                }
            }
        }
        if let Some(dup) = check_unique(children.iter().map(TableNode::name)) {
            return Err(BuildError::DuplicateName {
                path: join_path(row_path),
                name: dup.to_string(),
            });
        }
        Ok(children)
    }

    fn analysis_table(&self, a: &Analyze, adjacent: bool, data: &Dataset, row_path: &[String]) -> Result<TableNode, BuildError> {
        let name = a.path_name();
        let mut path = row_path.to_vec();
        path.push(name.clone());
        let rows = self.eval(a.function(), &name, a.var(), data, &path, RowKind::Analysis)?;
        let label = match (&a.var_label, a.var()) {
            (Some(l), _) => l.clone(),
            (None, AnalysisVar::Column(v)) => data
                .column(v)
                .and_then(|c| c.label().map(str::to_string))
                .unwrap_or_else(|| v.clone()),
            (None, AnalysisVar::PerColumn) => String::new(),
        };
        let label_visible = match a.show_labels {
            Visibility::Visible => true,
            Visibility::Hidden => false,
            Visibility::Default => adjacent,
        };
        Ok(TableNode::Elementary(std::sync::Arc::new(ElementaryTable {
            name,
            label,
            label_visible,
            indent_mod: a.indent_mod,
            rows,
            label_footnotes: Vec::new(),
        })))
    }

    fn split_table(&self, s: &RowSplit, rest: &[RowDirective], data: &Dataset, row_path: &[String]) -> Result<TableNode, BuildError> {
        let ctx = SplitContext {
            var: Some(s.var()),
            row_path,
            col_path: &[],
        };
        let facets = s
            .function()
            .apply(data, &ctx)
            .map_err(|e| split_error(s.describe(), row_path, e, "data"))?;
        let mut split_path = row_path.to_vec();
        split_path.push(s.name().to_string());
        if let Some(dup) = check_unique(facets.iter().map(|f| f.name.as_str())) {
            return Err(BuildError::DuplicateFacet {
                split: s.describe(),
                name: dup.to_string(),
                path: join_path(&split_path),
            });
        }
        let mut node = Subtable::new(SubtableKind::Split, s.name(), s.var());
        for f in facets {
            let mut path = split_path.clone();
            path.push(f.name.clone());
            let mut st = Subtable::new(SubtableKind::Facet, f.name.clone(), f.label.clone());
            st.indent_mod = s.indent_mod;
            if let Some(c) = s.content() {
                let mut cpath = path.clone();
                cpath.push(crate::table::CONTENT_TOKEN.to_string());
                let var = AnalysisVar::Column(c.var.clone());
                st.content = self.eval(&c.cfun, c.cfun.name(), &var, &f.data, &cpath, RowKind::Content)?;
            }
            st.label_visible = match s.child_labels {
                Visibility::Visible => true,
                Visibility::Hidden => false,
                Visibility::Default => s.content().is_none(),
            };
            st.children = self.build_level(rest, &f.data, &path)?;
            node.children.push(TableNode::Subtable(std::sync::Arc::new(st)));
        }
        Ok(TableNode::Subtable(std::sync::Arc::new(node)))
    }

    /// Runs `afun` once per leaf column on the row facet restricted to that
    /// column, and transposes the resulting cell groups into rows.
    fn eval(
        &self,
        afun: &AnalysisFunction,
        name: &str,
        var: &AnalysisVar,
        row_data: &Dataset,
        path: &[String],
        kind: RowKind,
    ) -> Result<Vec<DataRow>, BuildError> {
        let row_path = join_path(path);
        let mut columns: Vec<Vec<(String, String, Cell)>> = Vec::with_capacity(self.leaves.len());
        for leaf in self.leaves {
            let col_path = join_path(&leaf.path);
            let v = match var {
                AnalysisVar::Column(v) => v.as_str(),
                AnalysisVar::PerColumn => leaf
                    .inherit
                    .var_override
                    .as_deref()
                    .ok_or(LayoutError::NoMultivarSplit)?,
            };
            let cell_data = row_data.restrict_to(&leaf.data).map_err(|e| BuildError::Analysis {
                analysis: name.to_string(),
                row_path: row_path.clone(),
                col_path: col_path.clone(),
                message: e.to_string(),
            })?;
            let reference = match &leaf.inherit.reference {
                Some(r) => Some(row_data.restrict_to(r).map_err(|e| BuildError::Analysis {
                    analysis: name.to_string(),
                    row_path: row_path.clone(),
                    col_path: col_path.clone(),
                    message: e.to_string(),
                })?),
                None => None,
            };
            let slice = cell_data
                .column(v)
                .ok_or_else(|| missing(format!("analysis `{name}` in column `{col_path}`"), v, "data"))?;
            let ctx = FacetContext {
                row_path: path,
                col_path: &leaf.path,
                data: &cell_data,
                reference_data: reference.as_ref(),
                in_reference_column: leaf.inherit.in_reference,
                analysis_var: v,
                col_count: leaf.count,
            };
            let vcg = afun.call(&slice, &ctx).map_err(|message| BuildError::Analysis {
                analysis: name.to_string(),
                row_path: row_path.clone(),
                col_path: col_path.clone(),
                message,
            })?;
            if let Some(dup) = check_unique(vcg.rows.iter().map(|r| r.name.as_str())) {
                return Err(BuildError::DuplicateRowLabel {
                    analysis: name.to_string(),
                    row_path,
                    col_path,
                    name: dup.to_string(),
                });
            }
            let mut cells = Vec::with_capacity(vcg.len());
            for r in vcg.rows {
                let fail = |message: String| BuildError::Format {
                    analysis: name.to_string(),
                    row_path: row_path.clone(),
                    col_path: col_path.clone(),
                    message,
                };
                let spec = parse_format(&r.format).map_err(|e| fail(e.to_string()))?;
                let cell = Cell::new(r.value, spec).map_err(|e| fail(format!("row `{}`: {e}", r.name)))?;
                cells.push((r.name, r.label, cell));
            }
            columns.push(cells);
        }
        let keys = |c: &[(String, String, Cell)]| -> Vec<String> { c.iter().map(|(n, _, _)| n.clone()).collect() };
        if let Some(first) = columns.first() {
            let want = keys(first);
            for (j, c) in columns.iter().enumerate().skip(1) {
                let labels_differ = c.len() != first.len() || c.iter().zip(first).any(|(a, b)| a.0 != b.0 || a.1 != b.1);
                if labels_differ {
                    return Err(BuildError::LabelMismatch {
                        analysis: name.to_string(),
                        row_path,
                        left: join_path(&self.leaves[0].path),
                        right: join_path(&self.leaves[j].path),
                        left_rows: want,
                        right_rows: keys(c),
                    });
                }
            }
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        let mut iters: Vec<_> = columns.into_iter().map(Vec::into_iter).collect();
        let mut rows = Vec::with_capacity(n_rows);
        for _ in 0..n_rows {
            let mut cells = Vec::with_capacity(iters.len());
            let mut meta = None;
            for it in &mut iters {
                let (n, l, c) = it.next().expect("equal lengths checked");
                meta.get_or_insert((n, l));
                cells.push(c);
            }
            let (n, l) = meta.expect("at least one column");
            rows.push(DataRow::new(n, l, kind, cells));
        }
        Ok(rows)
    }
}
