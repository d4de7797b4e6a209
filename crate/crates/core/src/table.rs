//! Built tables: the row/column trees, path addressing and persistent
//! manipulation.
//!
//! Row paths alternate split names and facet names, then name an analysis
//! (or `@content` for group summary rows), then a row. Column paths
//! alternate split names and facet names; overall columns are a single
//! token. Every manipulation returns a new table and shares unchanged
//! subtrees with its input.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::format::{parse_format, CellValue, FormatError, FormatParseError, FormatSpec};

/// Path token addressing a facet's group summary rows.
pub const CONTENT_TOKEN: &str = "@content";
/// Path token matching every sibling (sorting only).
pub const WILDCARD: &str = "*";

/// Splits a `/`-separated path; the empty string is the empty path.
pub fn parse_path(s: &str) -> Vec<String> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split('/').map(str::to_string).collect()
    }
}

pub fn join_path(tokens: &[String]) -> String {
    tokens.join("/")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Rows,
    Cols,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Rows => "row",
            Dimension::Cols => "column",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", self.describe())]
pub struct PathError {
    pub dimension: Dimension,
    pub path: Vec<String>,
    /// Deepest prefix that did resolve.
    pub resolved: Vec<String>,
    pub reason: String,
    /// Tokens that would have been accepted next.
    pub candidates: Vec<String>,
}

impl PathError {
    fn describe(&self) -> String {
        let mut s = format!(
            "cannot resolve {} path `{}`: {}",
            self.dimension,
            join_path(&self.path),
            self.reason
        );
        if !self.resolved.is_empty() {
            s.push_str(&format!(" (resolved up to `{}`)", join_path(&self.resolved)));
        }
        if !self.candidates.is_empty() {
            s.push_str(&format!("; candidates: {}", self.candidates.join(", ")));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("{0}")]
    Structure(String),
    #[error("sort failed at `{path}`: {message}")]
    Sort { path: String, message: String },
    #[error(transparent)]
    FormatParse(#[from] FormatParseError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub value: CellValue,
    pub format: FormatSpec,
    /// Footnote texts in attachment order; numbered when rendered.
    pub footnotes: Vec<String>,
}

impl Cell {
    /// Fails when the value cannot be shown with the format.
    pub fn new(value: CellValue, format: FormatSpec) -> Result<Cell, FormatError> {
        format.apply(&value)?;
        Ok(Cell {
            value,
            format,
            footnotes: Vec::new(),
        })
    }

    pub fn parse(value: CellValue, format: &str) -> Result<Cell, TableError> {
        Ok(Cell::new(value, parse_format(format)?)?)
    }

    pub fn blank() -> Cell {
        Cell::new(CellValue::Blank, parse_format("xx").expect("valid")).expect("blank fits")
    }

    /// Formatted text without footnote markers.
    pub fn formatted(&self) -> String {
        self.format
            .apply(&self.value)
            .expect("cell values are checked against their format on construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Analysis,
    Content,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowKind::Analysis => "analysis",
            RowKind::Content => "content",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRow {
    /// Path token.
    pub name: String,
    pub label: String,
    pub kind: RowKind,
    pub cells: Vec<Cell>,
    pub footnotes: Vec<String>,
}

impl DataRow {
    pub fn new(name: impl Into<String>, label: impl Into<String>, kind: RowKind, cells: Vec<Cell>) -> Self {
        DataRow {
            name: name.into(),
            label: label.into(),
            kind,
            cells,
            footnotes: Vec::new(),
        }
    }

    /// Every number in the row's cells.
    pub fn numbers(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().flat_map(|c| c.value.numbers())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubtableKind {
    Root,
    /// Groups the facets of one row split; never displayed.
    Split,
    Facet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subtable {
    pub name: String,
    pub label: String,
    pub kind: SubtableKind,
    pub label_visible: bool,
    pub indent_mod: i32,
    /// Group summary rows.
    pub content: Vec<DataRow>,
    pub children: Vec<TableNode>,
    pub label_footnotes: Vec<String>,
}

impl Subtable {
    pub fn new(kind: SubtableKind, name: impl Into<String>, label: impl Into<String>) -> Self {
        Subtable {
            name: name.into(),
            label: label.into(),
            kind,
            label_visible: false,
            indent_mod: 0,
            content: Vec::new(),
            children: Vec::new(),
            label_footnotes: Vec::new(),
        }
    }

    fn child_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        if !self.content.is_empty() {
            names.push(CONTENT_TOKEN.to_string());
        }
        names.extend(self.children.iter().map(|c| c.name().to_string()));
        names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryTable {
    pub name: String,
    pub label: String,
    pub label_visible: bool,
    pub indent_mod: i32,
    pub rows: Vec<DataRow>,
    pub label_footnotes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableNode {
    Subtable(Arc<Subtable>),
    Elementary(Arc<ElementaryTable>),
}

impl TableNode {
    pub fn name(&self) -> &str {
        match self {
            TableNode::Subtable(s) => &s.name,
            TableNode::Elementary(e) => &e.name,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            TableNode::Subtable(s) => &s.label,
            TableNode::Elementary(e) => &e.label,
        }
    }

    /// Content rows for subtables, analysis rows for elementary tables.
    pub fn own_rows(&self) -> &[DataRow] {
        match self {
            TableNode::Subtable(s) => &s.content,
            TableNode::Elementary(e) => &e.rows,
        }
    }

    /// Every data row in the subtree, in display order.
    pub fn all_rows(&self) -> Vec<&DataRow> {
        let mut out = Vec::new();
        collect_rows(self, &mut out);
        out
    }
}

fn collect_rows<'a>(node: &'a TableNode, out: &mut Vec<&'a DataRow>) {
    match node {
        TableNode::Subtable(s) => {
            out.extend(&s.content);
            for c in &s.children {
                collect_rows(c, out);
            }
        }
        TableNode::Elementary(e) => out.extend(&e.rows),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnNode {
    /// `None` for overall and implicit columns, whose path is one token.
    pub split_name: Option<String>,
    pub name: String,
    pub label: String,
    /// Column count ("N").
    pub count: usize,
    pub is_reference: bool,
    pub var_override: Option<String>,
    pub children: Vec<ColumnNode>,
}

impl ColumnNode {
    fn tokens(&self) -> Vec<String> {
        match &self.split_name {
            Some(s) => vec![s.clone(), self.name.clone()],
            None => vec![self.name.clone()],
        }
    }

    fn leaf_count(&self) -> usize {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(ColumnNode::leaf_count).sum()
        }
    }

    fn depth(&self) -> usize {
        1 + self.children.iter().map(ColumnNode::depth).max().unwrap_or(0)
    }
}

/// One header label spanning `len` leaf columns from `start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderSpan {
    pub start: usize,
    pub len: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnTree {
    pub nodes: Vec<ColumnNode>,
    pub show_colcounts: bool,
}

impl ColumnTree {
    pub fn leaves(&self) -> Vec<&ColumnNode> {
        fn walk<'a>(n: &'a ColumnNode, out: &mut Vec<&'a ColumnNode>) {
            if n.children.is_empty() {
                out.push(n);
            }
            for c in &n.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        for n in &self.nodes {
            walk(n, &mut out);
        }
        out
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().map(ColumnNode::leaf_count).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.leaves().iter().map(|l| l.count).collect()
    }

    /// Number of header label lines.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(ColumnNode::depth).max().unwrap_or(0)
    }

    pub fn leaf_paths(&self) -> Vec<Vec<String>> {
        fn walk(n: &ColumnNode, prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
            let t = n.tokens();
            prefix.extend(t.iter().cloned());
            if n.children.is_empty() {
                out.push(prefix.clone());
            }
            for c in &n.children {
                walk(c, prefix, out);
            }
            prefix.truncate(prefix.len() - t.len());
        }
        let mut out = Vec::new();
        for n in &self.nodes {
            walk(n, &mut Vec::new(), &mut out);
        }
        out
    }

    /// Header label lines. Internal nodes sit on the line of their depth;
    /// leaves always sit on the last line so ragged trees stay aligned.
    pub fn header_rows(&self) -> Vec<Vec<HeaderSpan>> {
        let depth = self.depth();
        let mut rows = vec![Vec::new(); depth];
        fn walk(n: &ColumnNode, level: usize, start: usize, depth: usize, rows: &mut [Vec<HeaderSpan>]) {
            let len = n.leaf_count();
            let line = if n.children.is_empty() { depth - 1 } else { level };
            rows[line].push(HeaderSpan {
                start,
                len,
                label: n.label.clone(),
            });
            let mut s = start;
            for c in &n.children {
                walk(c, level + 1, s, depth, rows);
                s += c.leaf_count();
            }
        }
        let mut start = 0;
        for n in &self.nodes {
            walk(n, 0, start, depth, &mut rows);
            start += n.leaf_count();
        }
        rows
    }

    fn error(&self, path: &[String], resolved: usize, reason: &str, candidates: Vec<String>) -> PathError {
        PathError {
            dimension: Dimension::Cols,
            path: path.to_vec(),
            resolved: path[..resolved].to_vec(),
            reason: reason.to_string(),
            candidates,
        }
    }

    /// Leaf index range selected by a (possibly partial) column path, and
    /// the tree reduced to that branch.
    pub fn restrict(&self, path: &[String]) -> Result<(ColumnTree, std::ops::Range<usize>), PathError> {
        if path.iter().any(|t| t == WILDCARD) {
            return Err(self.error(path, 0, "wildcards are not allowed in column paths", vec![]));
        }
        let (nodes, range) = restrict_nodes(&self.nodes, path, 0, 0, self)?;
        Ok((
            ColumnTree {
                nodes,
                show_colcounts: self.show_colcounts,
            },
            range,
        ))
    }

    /// Index of the leaf column a full path names.
    pub fn resolve_leaf(&self, path: &[String]) -> Result<usize, PathError> {
        let (tree, range) = self.restrict(path)?;
        if range.len() != 1 || !tree.leaves()[0].children.is_empty() {
            let paths: Vec<String> = tree.leaf_paths().iter().map(|p| join_path(p)).collect();
            return Err(self.error(path, path.len(), "path names more than one column", paths));
        }
        Ok(range.start)
    }
}

fn restrict_nodes(
    nodes: &[ColumnNode],
    path: &[String],
    consumed: usize,
    offset: usize,
    tree: &ColumnTree,
) -> Result<(Vec<ColumnNode>, std::ops::Range<usize>), PathError> {
    let full = path;
    let rest = &path[consumed..];
    let total: usize = nodes.iter().map(ColumnNode::leaf_count).sum();
    if rest.is_empty() {
        return Ok((nodes.to_vec(), offset..offset + total));
    }
    let mut start = offset;
    let mut split_match = false;
    for n in nodes {
        let toks = n.tokens();
        let len = n.leaf_count();
        if toks.len() == 2 && toks[0] == rest[0] {
            split_match = true;
            if rest.len() == 1 {
                // Split name alone selects all facets of that split.
                let selected: Vec<ColumnNode> = nodes
                    .iter()
                    .filter(|m| m.split_name.as_deref() == Some(&rest[0]))
                    .cloned()
                    .collect();
                let s = offset
                    + nodes
                        .iter()
                        .take_while(|m| m.split_name.as_deref() != Some(&rest[0]))
                        .map(ColumnNode::leaf_count)
                        .sum::<usize>();
                let l: usize = selected.iter().map(ColumnNode::leaf_count).sum();
                return Ok((selected, s..s + l));
            }
            if toks[1] == rest[1] {
                let (children, range) =
                    restrict_nodes(&n.children, full, consumed + 2, start, tree)?;
                let mut node = n.clone();
                if rest.len() > 2 {
                    node.children = children;
                }
                let range = if rest.len() > 2 { range } else { start..start + len };
                return Ok((vec![node], range));
            }
        } else if toks.len() == 1 && toks[0] == rest[0] {
            if rest.len() > 1 {
                return Err(tree.error(full, consumed + 1, "overall columns have no children", vec![]));
            }
            return Ok((vec![n.clone()], start..start + len));
        }
        start += len;
    }
    let candidates: Vec<String> = if split_match {
        nodes
            .iter()
            .filter(|n| n.split_name.as_deref() == Some(&rest[0]))
            .map(|n| n.name.clone())
            .collect()
    } else {
        let mut c: Vec<String> = Vec::new();
        for n in nodes {
            let t = n.tokens()[0].clone();
            if !c.contains(&t) {
                c.push(t);
            }
        }
        c
    };
    let resolved = if split_match { consumed + 1 } else { consumed };
    let reason = format!("no match for `{}`", path[resolved]);
    Err(tree.error(full, resolved, &reason, candidates))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Child(usize),
    Content,
    Row(usize),
}

/// What a row path resolved to.
#[derive(Debug, Clone, Copy)]
pub enum RowTarget<'a> {
    Root(&'a Arc<Subtable>),
    Node(&'a TableNode),
    /// The group summary rows of a facet.
    Content(&'a Subtable),
    Row(&'a DataRow),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisplayKind {
    Label,
    Content,
    Analysis,
}

/// One rendered body line.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplayRow<'a> {
    pub kind: DisplayKind,
    pub label: &'a str,
    pub indent: usize,
    /// Path of the row, or of the node for label rows.
    pub path: Vec<String>,
    /// Empty for label rows.
    pub cells: &'a [Cell],
    pub footnotes: &'a [String],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertPosition {
    Before,
    After,
}

/// What a sort score function is asked to score.
#[derive(Debug, Clone, Copy)]
pub enum SortItem<'a> {
    Node(&'a TableNode),
    Row(&'a DataRow),
}

impl SortItem<'_> {
    pub fn name(&self) -> &str {
        match self {
            SortItem::Node(n) => n.name(),
            SortItem::Row(r) => &r.name,
        }
    }
}

/// Scores by the first number in leaf column `col`, reading the row itself
/// or, for subtables, the group summary row named `stat` (default: first).
pub fn column_score(col: usize, stat: Option<String>) -> impl Fn(SortItem<'_>) -> Result<f64, String> {
    move |item| {
        let row = match item {
            SortItem::Row(r) => r,
            SortItem::Node(n) => {
                let rows = n.own_rows();
                let found = match &stat {
                    Some(s) => rows.iter().find(|r| &r.name == s),
                    None => rows.first(),
                };
                found.ok_or_else(|| match &stat {
                    Some(s) => format!("`{}` has no summary row `{s}`", n.name()),
                    None => format!("`{}` has no summary rows to sort by", n.name()),
                })?
            }
        };
        let cell = row
            .cells
            .get(col)
            .ok_or_else(|| format!("column index {col} out of range"))?;
        cell.value
            .numbers()
            .first()
            .copied()
            .ok_or_else(|| format!("cell in row `{}` holds no number", row.name))
    }
}

/// Default pruning rule: every number in the node's summary rows (or, for
/// nodes without them, in all its rows) is zero.
pub fn all_zero(node: &TableNode) -> bool {
    let rows: Vec<&DataRow> = match node {
        TableNode::Subtable(s) if !s.content.is_empty() => s.content.iter().collect(),
        _ => node.all_rows(),
    };
    rows.iter().flat_map(|r| r.numbers()).all(|x| x == 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableTree {
    columns: Arc<ColumnTree>,
    body: Arc<Subtable>,
    hsep: char,
}

impl TableTree {
    /// Checks that every row has one cell per leaf column.
    pub fn new(columns: ColumnTree, body: Subtable, hsep: char) -> Result<TableTree, TableError> {
        let n = columns.n_leaves();
        let t = TableTree {
            columns: Arc::new(columns),
            body: Arc::new(body),
            hsep,
        };
        for (path, row) in t.rows_with_paths() {
            if row.cells.len() != n {
                return Err(TableError::Structure(format!(
                    "row `{}` has {} cells but the table has {n} columns",
                    join_path(&path),
                    row.cells.len()
                )));
            }
        }
        Ok(t)
    }

    pub fn columns(&self) -> &ColumnTree {
        &self.columns
    }

    pub fn body(&self) -> &Subtable {
        &self.body
    }

    pub fn hsep(&self) -> char {
        self.hsep
    }

    pub fn with_hsep(&self, hsep: char) -> TableTree {
        TableTree {
            hsep,
            ..self.clone()
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.n_leaves()
    }

    pub fn col_paths(&self) -> Vec<Vec<String>> {
        self.columns.leaf_paths()
    }

    /// Paths of every data row, in display order.
    pub fn row_paths(&self) -> Vec<Vec<String>> {
        self.rows_with_paths().into_iter().map(|(p, _)| p).collect()
    }

    pub fn rows_with_paths(&self) -> Vec<(Vec<String>, &DataRow)> {
        fn walk<'a>(st: &'a Subtable, prefix: &mut Vec<String>, out: &mut Vec<(Vec<String>, &'a DataRow)>) {
            for r in &st.content {
                let mut p = prefix.clone();
                p.push(CONTENT_TOKEN.to_string());
                p.push(r.name.clone());
                out.push((p, r));
            }
            for c in &st.children {
                prefix.push(c.name().to_string());
                match c {
                    TableNode::Subtable(s) => walk(s, prefix, out),
                    TableNode::Elementary(e) => {
                        for r in &e.rows {
                            let mut p = prefix.clone();
                            p.push(r.name.clone());
                            out.push((p, r));
                        }
                    }
                }
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut Vec::new(), &mut out);
        out
    }

    /// Body lines in display order with their indentation.
    pub fn display_rows(&self) -> Vec<DisplayRow<'_>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.walk_display(&self.body, 0, &mut path, &mut out);
        out
    }

    fn walk_display<'a>(&'a self, st: &'a Subtable, level: i32, path: &mut Vec<String>, out: &mut Vec<DisplayRow<'a>>) {
        let lvl = level + st.indent_mod;
        let inner = match st.kind {
            SubtableKind::Root | SubtableKind::Split => lvl,
            SubtableKind::Facet => {
                if st.label_visible {
                    out.push(DisplayRow {
                        kind: DisplayKind::Label,
                        label: &st.label,
                        indent: lvl.max(0) as usize,
                        path: path.clone(),
                        cells: &[],
                        footnotes: &st.label_footnotes,
                    });
                }
                lvl + i32::from(st.label_visible)
            }
        };
        for r in &st.content {
            let mut p = path.clone();
            p.push(CONTENT_TOKEN.to_string());
            p.push(r.name.clone());
            out.push(data_display(r, DisplayKind::Content, inner, p));
        }
        let child_level = inner + i32::from(!st.content.is_empty());
        for c in &st.children {
            path.push(c.name().to_string());
            match c {
                TableNode::Subtable(s) => self.walk_display(s, child_level, path, out),
                TableNode::Elementary(e) => {
                    let lvl = child_level + e.indent_mod;
                    if e.label_visible {
                        out.push(DisplayRow {
                            kind: DisplayKind::Label,
                            label: &e.label,
                            indent: lvl.max(0) as usize,
                            path: path.clone(),
                            cells: &[],
                            footnotes: &e.label_footnotes,
                        });
                    }
                    let rows_level = lvl + i32::from(e.label_visible);
                    for r in &e.rows {
                        let mut p = path.clone();
                        p.push(r.name.clone());
                        out.push(data_display(r, DisplayKind::Analysis, rows_level, p));
                    }
                }
            }
            path.pop();
        }
    }

    fn row_error(&self, path: &[String], resolved: usize, reason: impl Into<String>, candidates: Vec<String>) -> PathError {
        PathError {
            dimension: Dimension::Rows,
            path: path.to_vec(),
            resolved: path[..resolved].to_vec(),
            reason: reason.into(),
            candidates,
        }
    }

    fn locate(&self, path: &[String]) -> Result<Vec<Step>, PathError> {
        let mut steps = Vec::new();
        let mut cur = RowTarget::Root(&self.body);
        for (i, tok) in path.iter().enumerate() {
            if tok == WILDCARD {
                return Err(self.row_error(path, i, "wildcards are only allowed when sorting", vec![]));
            }
            let (step, next) = self.step(cur, tok).map_err(|cands| {
                let reason = if cands.is_empty() {
                    format!("`{}` has no children", join_path(&path[..i]))
                } else {
                    format!("no match for `{tok}`")
                };
                self.row_error(path, i, reason, cands)
            })?;
            steps.push(step);
            cur = next;
        }
        Ok(steps)
    }

    fn step<'a>(&'a self, cur: RowTarget<'a>, tok: &str) -> Result<(Step, RowTarget<'a>), Vec<String>> {
        match cur {
            RowTarget::Root(st) | RowTarget::Node(TableNode::Subtable(st)) => self.step_subtable(st, tok),
            RowTarget::Node(TableNode::Elementary(e)) => e
                .rows
                .iter()
                .position(|r| r.name == tok)
                .map(|i| (Step::Row(i), RowTarget::Row(&e.rows[i])))
                .ok_or_else(|| e.rows.iter().map(|r| r.name.clone()).collect()),
            RowTarget::Content(st) => st
                .content
                .iter()
                .position(|r| r.name == tok)
                .map(|i| (Step::Row(i), RowTarget::Row(&st.content[i])))
                .ok_or_else(|| st.content.iter().map(|r| r.name.clone()).collect()),
            RowTarget::Row(_) => Err(Vec::new()),
        }
    }

    fn step_subtable<'a>(&'a self, st: &'a Subtable, tok: &str) -> Result<(Step, RowTarget<'a>), Vec<String>> {
        if tok == CONTENT_TOKEN && !st.content.is_empty() {
            return Ok((Step::Content, RowTarget::Content(st)));
        }
        st.children
            .iter()
            .position(|c| c.name() == tok)
            .map(|i| (Step::Child(i), RowTarget::Node(&st.children[i])))
            .ok_or_else(|| st.child_names())
    }

    fn target(&self, steps: &[Step]) -> RowTarget<'_> {
        let mut cur = RowTarget::Root(&self.body);
        for s in steps {
            cur = match (cur, s) {
                (RowTarget::Root(st), Step::Child(i))
                | (RowTarget::Node(TableNode::Subtable(st)), Step::Child(i)) => RowTarget::Node(&st.children[*i]),
                (RowTarget::Root(st), Step::Content)
                | (RowTarget::Node(TableNode::Subtable(st)), Step::Content) => RowTarget::Content(st),
                (RowTarget::Node(TableNode::Elementary(e)), Step::Row(i)) => RowTarget::Row(&e.rows[*i]),
                (RowTarget::Content(st), Step::Row(i)) => RowTarget::Row(&st.content[*i]),
                _ => unreachable!("steps come from locate"),
            };
        }
        cur
    }

    /// Resolves a row path without wildcards.
    pub fn resolve_row(&self, path: &[String]) -> Result<RowTarget<'_>, PathError> {
        let steps = self.locate(path)?;
        Ok(self.target(&steps))
    }

    fn resolve_data_row(&self, path: &[String]) -> Result<(Vec<Step>, &DataRow), PathError> {
        let steps = self.locate(path)?;
        match self.target(&steps) {
            RowTarget::Row(r) => Ok((steps, r)),
            other => {
                let cands = match other {
                    RowTarget::Root(st) => st.child_names(),
                    RowTarget::Node(TableNode::Subtable(st)) => st.child_names(),
                    RowTarget::Node(TableNode::Elementary(e)) => e.rows.iter().map(|r| r.name.clone()).collect(),
                    RowTarget::Content(st) => st.content.iter().map(|r| r.name.clone()).collect(),
                    RowTarget::Row(_) => unreachable!(),
                };
                Err(self.row_error(path, path.len(), "path stops before reaching a row", cands))
            }
        }
    }

    pub fn row_at(&self, path: &[String]) -> Result<&DataRow, PathError> {
        self.resolve_data_row(path).map(|(_, r)| r)
    }

    pub fn cell_at(&self, row_path: &[String], col_path: &[String]) -> Result<&Cell, PathError> {
        let row = self.row_at(row_path)?;
        let col = self.columns.resolve_leaf(col_path)?;
        Ok(&row.cells[col])
    }

    /// The part of the table under `row_path`, restricted to the columns
    /// under `col_path`. Ancestors of the selected node are kept, with no
    /// label or summary rows of their own, so the original paths still
    /// resolve in the result.
    pub fn subset(&self, row_path: &[String], col_path: &[String]) -> Result<TableTree, PathError> {
        let steps = self.locate(row_path)?;
        let (columns, range) = self.columns.restrict(col_path)?;
        let body = subset_subtable(&self.body, &steps, true);
        let mut body = body;
        if range != (0..self.n_cols()) {
            restrict_cells(&mut body, &range);
        }
        Ok(TableTree {
            columns: Arc::new(columns),
            body: Arc::new(body),
            hsep: self.hsep,
        })
    }

    fn expand(&self, path: &[String]) -> Result<Vec<Vec<Step>>, PathError> {
        let mut frontier: Vec<(Vec<Step>, RowTarget<'_>)> = vec![(Vec::new(), RowTarget::Root(&self.body))];
        for (i, tok) in path.iter().enumerate() {
            let mut next = Vec::new();
            for (steps, cur) in &frontier {
                if tok == WILDCARD {
                    let n = match *cur {
                        RowTarget::Root(st) | RowTarget::Node(TableNode::Subtable(st)) => {
                            for j in 0..st.children.len() {
                                let mut s = steps.clone();
                                s.push(Step::Child(j));
                                next.push((s, RowTarget::Node(&st.children[j])));
                            }
                            continue;
                        }
                        RowTarget::Node(TableNode::Elementary(e)) => e.rows.len(),
                        RowTarget::Content(st) => st.content.len(),
                        RowTarget::Row(_) => 0,
                    };
                    for j in 0..n {
                        let mut s = steps.clone();
                        s.push(Step::Row(j));
                        let t = self.target(&s);
                        next.push((s, t));
                    }
                } else if let Ok((step, t)) = self.step(*cur, tok) {
                    let mut s = steps.clone();
                    s.push(step);
                    next.push((s, t));
                }
            }
            if next.is_empty() {
                let cands = frontier
                    .iter()
                    .flat_map(|(_, cur)| match *cur {
                        RowTarget::Root(st) | RowTarget::Node(TableNode::Subtable(st)) => st.child_names(),
                        RowTarget::Node(TableNode::Elementary(e)) => e.rows.iter().map(|r| r.name.clone()).collect(),
                        RowTarget::Content(st) => st.content.iter().map(|r| r.name.clone()).collect(),
                        RowTarget::Row(_) => Vec::new(),
                    })
                    .fold(Vec::new(), |mut acc, c| {
                        if !acc.contains(&c) {
                            acc.push(c);
                        }
                        acc
                    });
                return Err(self.row_error(path, i, format!("no match for `{tok}`"), cands));
            }
            frontier = next;
        }
        Ok(frontier.into_iter().map(|(s, _)| s).collect())
    }

    fn steps_to_path(&self, steps: &[Step]) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = RowTarget::Root(&self.body);
        for s in steps {
            let tok = match (cur, s) {
                (_, Step::Content) => CONTENT_TOKEN.to_string(),
                (RowTarget::Root(st) | RowTarget::Node(TableNode::Subtable(st)), Step::Child(i)) => {
                    st.children[*i].name().to_string()
                }
                (RowTarget::Node(TableNode::Elementary(e)), Step::Row(i)) => e.rows[*i].name.clone(),
                (RowTarget::Content(st), Step::Row(i)) => st.content[*i].name.clone(),
                _ => unreachable!(),
            };
            out.push(tok);
            cur = self.target(&steps[..out.len()]);
        }
        out
    }

    /// Reorders the children (or rows) of every node `path` matches by
    /// `score`. Ties keep their order.
    pub fn sort_at_path<F>(&self, path: &[String], score: F, decreasing: bool) -> Result<TableTree, TableError>
    where
        F: Fn(SortItem<'_>) -> Result<f64, String>,
    {
        let matches = self.expand(path)?;
        let mut body = self.body.clone();
        for steps in &matches {
            let base = self.steps_to_path(steps);
            let fail = |name: &str, message: String| {
                let mut p = base.clone();
                p.push(name.to_string());
                TableError::Sort {
                    path: join_path(&p),
                    message,
                }
            };
            let sort = |scores: Vec<f64>| -> Vec<usize> {
                let mut idx: Vec<usize> = (0..scores.len()).collect();
                idx.sort_by(|&a, &b| {
                    let o = scores[a].total_cmp(&scores[b]);
                    if decreasing {
                        o.reverse()
                    } else {
                        o
                    }
                });
                idx
            };
            match self.target(steps) {
                RowTarget::Root(st) | RowTarget::Node(TableNode::Subtable(st)) => {
                    let scores = st
                        .children
                        .iter()
                        .map(|c| score(SortItem::Node(c)).map_err(|m| fail(c.name(), m)))
                        .collect::<Result<Vec<f64>, _>>()?;
                    let order = sort(scores);
                    if let NodeMut::Sub(s) = node_mut(Arc::make_mut(&mut body), steps) {
                        s.children = order.iter().map(|&i| st.children[i].clone()).collect();
                    }
                }
                RowTarget::Node(TableNode::Elementary(e)) => {
                    let scores = e
                        .rows
                        .iter()
                        .map(|r| score(SortItem::Row(r)).map_err(|m| fail(&r.name, m)))
                        .collect::<Result<Vec<f64>, _>>()?;
                    let order = sort(scores);
                    if let NodeMut::Elem(x) = node_mut(Arc::make_mut(&mut body), steps) {
                        x.rows = order.iter().map(|&i| e.rows[i].clone()).collect();
                    }
                }
                RowTarget::Content(st) => {
                    let scores = st
                        .content
                        .iter()
                        .map(|r| score(SortItem::Row(r)).map_err(|m| fail(&r.name, m)))
                        .collect::<Result<Vec<f64>, _>>()?;
                    let order = sort(scores);
                    if let NodeMut::Content(x) = node_mut(Arc::make_mut(&mut body), steps) {
                        x.content = order.iter().map(|&i| st.content[i].clone()).collect();
                    }
                }
                RowTarget::Row(_) => {
                    return Err(TableError::Structure(format!(
                        "`{}` is a row; sorting needs a node with children",
                        join_path(&base)
                    )))
                }
            }
        }
        Ok(TableTree {
            columns: self.columns.clone(),
            body,
            hsep: self.hsep,
        })
    }

    /// Drops every subtree the predicate selects, then every parent left
    /// without rows. The root is kept even when empty.
    pub fn prune_table<F>(&self, pred: F) -> TableTree
    where
        F: Fn(&TableNode) -> bool,
    {
        let mut body = (*self.body).clone();
        body.children = prune_children(&self.body.children, &pred);
        TableTree {
            columns: self.columns.clone(),
            body: Arc::new(body),
            hsep: self.hsep,
        }
    }

    /// Prunes subtrees whose summary (or, lacking one, analysis) numbers
    /// are all zero.
    pub fn prune_zero(&self) -> TableTree {
        self.prune_table(all_zero)
    }

    /// Inserts `row` next to the row `path` names, or appends it when
    /// `path` names an analysis table.
    pub fn insert_row_at_path(&self, path: &[String], row: DataRow, position: InsertPosition) -> Result<TableTree, TableError> {
        let n = self.n_cols();
        if row.cells.len() != n {
            return Err(TableError::Structure(format!(
                "row `{}` has {} cells but the table has {n} columns",
                row.name,
                row.cells.len()
            )));
        }
        for c in &row.cells {
            c.format.apply(&c.value)?;
        }
        let steps = self.locate(path)?;
        let (table_steps, index) = match (self.target(&steps), steps.last()) {
            (RowTarget::Node(TableNode::Elementary(e)), _) => (steps.clone(), e.rows.len()),
            (RowTarget::Row(r), Some(Step::Row(i))) if r.kind == RowKind::Analysis => (
                steps[..steps.len() - 1].to_vec(),
                match position {
                    InsertPosition::Before => *i,
                    InsertPosition::After => i + 1,
                },
            ),
            _ => {
                return Err(TableError::Structure(format!(
                    "`{}` is not an analysis row or analysis table; rows can only be inserted there",
                    join_path(path)
                )))
            }
        };
        let mut body = self.body.clone();
        match node_mut(Arc::make_mut(&mut body), &table_steps) {
            NodeMut::Elem(e) => {
                if e.rows.iter().any(|r| r.name == row.name) {
                    return Err(TableError::Structure(format!(
                        "`{}` already has a row named `{}`",
                        e.name, row.name
                    )));
                }
                e.rows.insert(index, DataRow { kind: RowKind::Analysis, ..row });
            }
            _ => unreachable!("checked above"),
        }
        Ok(TableTree {
            columns: self.columns.clone(),
            body,
            hsep: self.hsep,
        })
    }

    /// Attaches a footnote to a cell (with `col_path`), to a row label, or
    /// to the label row of a facet or analysis table.
    pub fn add_footnote_at_path(&self, row_path: &[String], col_path: Option<&[String]>, text: impl Into<String>) -> Result<TableTree, TableError> {
        let text = text.into();
        let steps = self.locate(row_path)?;
        let col = col_path.map(|c| self.columns.resolve_leaf(c)).transpose()?;
        let visible = match self.target(&steps) {
            RowTarget::Row(_) => true,
            RowTarget::Node(TableNode::Subtable(s)) => s.kind == SubtableKind::Facet && s.label_visible,
            RowTarget::Node(TableNode::Elementary(e)) => e.label_visible,
            RowTarget::Root(_) | RowTarget::Content(_) => false,
        };
        let is_row = matches!(self.target(&steps), RowTarget::Row(_));
        if !visible || (col.is_some() && !is_row) {
            return Err(TableError::Structure(format!(
                "`{}` has no {} to annotate",
                join_path(row_path),
                if col.is_some() { "cell" } else { "visible label" }
            )));
        }
        let mut body = self.body.clone();
        match node_mut(Arc::make_mut(&mut body), &steps) {
            NodeMut::Row(r) => match col {
                Some(c) => r.cells[c].footnotes.push(text),
                None => r.footnotes.push(text),
            },
            NodeMut::Sub(s) => s.label_footnotes.push(text),
            NodeMut::Elem(e) => e.label_footnotes.push(text),
            NodeMut::Content(_) => unreachable!("checked above"),
        }
        Ok(TableTree {
            columns: self.columns.clone(),
            body,
            hsep: self.hsep,
        })
    }

    /// Replaces the format of one cell, or of every cell in a row.
    pub fn with_format_at_path(&self, row_path: &[String], col_path: Option<&[String]>, format: &str) -> Result<TableTree, TableError> {
        let spec = parse_format(format)?;
        let (steps, row) = self.resolve_data_row(row_path)?;
        let cols: Vec<usize> = match col_path {
            Some(c) => vec![self.columns.resolve_leaf(c)?],
            None => (0..row.cells.len()).collect(),
        };
        for &c in &cols {
            spec.apply(&row.cells[c].value)?;
        }
        let mut body = self.body.clone();
        if let NodeMut::Row(r) = node_mut(Arc::make_mut(&mut body), &steps) {
            for c in cols {
                r.cells[c].format = spec.clone();
            }
        }
        Ok(TableTree {
            columns: self.columns.clone(),
            body,
            hsep: self.hsep,
        })
    }
}

fn data_display(r: &DataRow, kind: DisplayKind, level: i32, path: Vec<String>) -> DisplayRow<'_> {
    DisplayRow {
        kind,
        label: &r.label,
        indent: level.max(0) as usize,
        path,
        cells: &r.cells,
        footnotes: &r.footnotes,
    }
}

enum NodeMut<'a> {
    Sub(&'a mut Subtable),
    Elem(&'a mut ElementaryTable),
    Content(&'a mut Subtable),
    Row(&'a mut DataRow),
}

/// Copy-on-write descent: only nodes along `steps` are cloned, and only
/// when shared.
fn node_mut<'a>(st: &'a mut Subtable, steps: &[Step]) -> NodeMut<'a> {
    match steps.split_first() {
        None => NodeMut::Sub(st),
        Some((Step::Content, rest)) => match rest.first() {
            None => NodeMut::Content(st),
            Some(Step::Row(i)) => NodeMut::Row(&mut st.content[*i]),
            Some(_) => unreachable!(),
        },
        Some((Step::Child(i), rest)) => match &mut st.children[*i] {
            TableNode::Subtable(a) => node_mut(Arc::make_mut(a), rest),
            TableNode::Elementary(a) => {
                let e = Arc::make_mut(a);
                match rest.first() {
                    None => NodeMut::Elem(e),
                    Some(Step::Row(j)) => NodeMut::Row(&mut e.rows[*j]),
                    Some(_) => unreachable!(),
                }
            }
        },
        Some((Step::Row(_), _)) => unreachable!(),
    }
}

fn subset_subtable(st: &Subtable, steps: &[Step], is_root: bool) -> Subtable {
    match steps.split_first() {
        None => st.clone(),
        Some((step, rest)) => {
            let mut out = Subtable {
                content: Vec::new(),
                children: Vec::new(),
                label_footnotes: Vec::new(),
                label_visible: false,
                ..st.clone()
            };
            if !is_root && out.kind == SubtableKind::Facet {
                // Ancestors become pass-through groups.
                out.kind = SubtableKind::Split;
                out.indent_mod = 0;
            }
            match step {
                Step::Content => {
                    // Keep the facet's own label and summary rows only.
                    out.kind = st.kind;
                    out.label_visible = st.label_visible;
                    out.indent_mod = st.indent_mod;
                    out.label_footnotes = st.label_footnotes.clone();
                    out.content = match rest.first() {
                        Some(Step::Row(i)) => vec![st.content[*i].clone()],
                        _ => st.content.clone(),
                    };
                }
                Step::Child(i) => {
                    out.children = vec![match &st.children[*i] {
                        TableNode::Subtable(s) => TableNode::Subtable(Arc::new(subset_subtable(s, rest, false))),
                        TableNode::Elementary(e) => {
                            let mut e = (**e).clone();
                            if let Some(Step::Row(j)) = rest.first() {
                                e.rows = vec![e.rows[*j].clone()];
                            }
                            TableNode::Elementary(Arc::new(e))
                        }
                    }];
                }
                Step::Row(_) => unreachable!(),
            }
            out
        }
    }
}

fn restrict_cells(st: &mut Subtable, range: &std::ops::Range<usize>) {
    for r in &mut st.content {
        r.cells = r.cells[range.clone()].to_vec();
    }
    for c in &mut st.children {
        match c {
            TableNode::Subtable(s) => restrict_cells(Arc::make_mut(s), range),
            TableNode::Elementary(e) => {
                for r in &mut Arc::make_mut(e).rows {
                    r.cells = r.cells[range.clone()].to_vec();
                }
            }
        }
    }
}

fn prune_children<F: Fn(&TableNode) -> bool>(children: &[TableNode], pred: &F) -> Vec<TableNode> {
    children
        .iter()
        .filter(|c| !pred(c))
        .filter_map(|c| match c {
            TableNode::Subtable(s) => {
                let kept = prune_children(&s.children, pred);
                if kept.is_empty() && s.content.is_empty() {
                    None
                } else if kept.len() == s.children.len() {
                    Some(c.clone())
                } else {
                    let mut s = (**s).clone();
                    s.children = kept;
                    Some(TableNode::Subtable(Arc::new(s)))
                }
            }
            TableNode::Elementary(e) => (!e.rows.is_empty()).then(|| c.clone()),
        })
        .collect()
}
