//! One function per acceptance criterion. Each returns a short summary on
//! success and the first discrepancy on failure.

use std::collections::HashMap;
use std::time::Instant;

use tabula::ard::ard_to_csv_string;
use tabula::layout::SplitContext;
use tabula::table::DisplayKind;
use tabula::{
    add_combo_levels, apply_format, as_ard, build_table, column_score, compute_column_layout,
    cumulative_quantile_split, parse_format, partition_by_levels, read_ard, render_text, CellValue,
    ComboLevel, Dataset, InsertPosition, RenderOptions, TableNode, TableTree,
};

use super::random::{matches, RandomCase};
use super::*;

pub type Check = Result<String, String>;

/// Row or column path with the oracle conditions selecting its rows.
type Selection<'a> = (Vec<&'a str>, Vec<(&'a str, &'a str)>);

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($arg)*));
        }
    };
}

fn numbers(t: &TableTree, row: &[&str], col: &[&str]) -> Result<Vec<f64>, String> {
    let row: Vec<String> = row.iter().map(|s| s.to_string()).collect();
    let col: Vec<String> = col.iter().map(|s| s.to_string()).collect();
    t.cell_at(&row, &col).map(|c| c.value.numbers()).map_err(|e| e.to_string())
}

// ------------------------------------------------------------------ 1

pub fn mtcars_frequency() -> Check {
    let start = Instant::now();
    let t = mtcars_table();
    let elapsed = start.elapsed();
    let want = [("Man", [15.0, 4.0, 0.0]), ("Auto", [0.0, 8.0, 5.0])];
    for (am, row) in want {
        for (gear, v) in ["3", "4", "5"].iter().zip(row) {
            let got = numbers(&t, &["am", am], &["gear", gear])?;
            ensure!(got == [v], "{am}/gear {gear}: got {got:?}, want {v}");
        }
    }
    ensure!(t.row_paths().len() == 2 && t.n_cols() == 3, "table is not 2x3");
    ensure!(elapsed.as_secs_f64() < 1.0, "build took {elapsed:?}");
    Ok(format!("cells 15,4,0 / 0,8,5 in {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

// ------------------------------------------------------------------ 2

pub fn format_reproduction() -> Check {
    let cases = [
        ("xx (xx.xx%)", vec![114.0, 114.0 / 146.0], "114 (78.08%)"),
        ("xx.x (xx.x%)", vec![114.0, 114.0 / 134.0], "114.0 (85.1%)"),
    ];
    for (spec, v, want) in cases {
        let f = parse_format(spec).map_err(|e| e.to_string())?;
        let got = apply_format(&f, &CellValue::Tuple(v)).map_err(|e| e.to_string())?;
        ensure!(got == want, "{spec}: got {got:?}, want {want:?}");
    }
    Ok("\"114 (78.08%)\" and \"114.0 (85.1%)\"".into())
}

// ------------------------------------------------------------------ 3

struct Expected<'a> {
    name: &'static str,
    header: Vec<Vec<&'static str>>,
    counts: Option<Vec<&'static str>>,
    labels: Vec<&'a str>,
}

fn check_structure(t: &TableTree, e: &Expected<'_>) -> Result<(), String> {
    let text = render_text(t, &RenderOptions::default());
    let (head, body) = split_render(&text);
    let n_head = e.header.len() + usize::from(e.counts.is_some());
    ensure!(head.len() == n_head, "{}: {} header lines, want {n_head}\n{text}", e.name, head.len());
    for (i, want) in e.header.iter().enumerate() {
        let got = header_words(&head[i]);
        ensure!(got == *want, "{}: header line {i} is {got:?}, want {want:?}", e.name);
    }
    if let Some(want) = &e.counts {
        let got = header_words(head.last().expect("count line"));
        ensure!(got == *want, "{}: count line {got:?}, want {want:?}", e.name);
    }
    let lay = compute_column_layout(t, &RenderOptions::default());
    let got = row_labels(&body, lay.label_width);
    ensure!(got == e.labels, "{}: row labels\n{got:#?}\nwant\n{:#?}", e.name, e.labels);
    Ok(())
}

const PAT: &str = "Patients with at least one event";
const GI: &str = "GASTROINTESTINAL";
const MSK: &str = "MUSCULOSKELETAL AND CONNECTIVE TISSUE";

fn ae_structure() -> Result<(), String> {
    let t = ae_table();
    check_structure(
        &t,
        &Expected {
            name: "adverse events",
            header: vec![vec!["ARM A", "ARM B"]],
            counts: Some(vec!["(N=146)", "(N=154)"]),
            labels: vec![
                PAT,
                "Total events",
                GI,
                "  Patients with at least one event",
                "  Total events",
                "  ABDOMINAL DISCOMFORT",
                "  ABDOMINAL FULLNESS DUE TO GAS",
                "  GINGIVAL BLEEDING",
                "  NAUSEA (INTERMITTENT)",
                MSK,
                "  Patients with at least one event",
                "  Total events",
                "  BACK PAIN",
                "  WEAKNESS",
            ],
        },
    )?;
    let adae = Raw::load("adae");
    let adsl = Raw::load("adsl");
    for arm in ["ARM A", "ARM B"] {
        let col = ["ARM", arm];
        let n = adsl.count(&[("ARM", arm)]) as f64;
        let mut blocks: Vec<Selection<'_>> = vec![(vec!["USUBJID"], vec![("ARM", arm)])];
        for body in [GI, MSK] {
            blocks.push((vec!["AEBODSYS", body, "@content"], vec![("ARM", arm), ("AEBODSYS", body)]));
        }
        for (prefix, conds) in &blocks {
            let pats = adae.distinct(conds, "USUBJID") as f64;
            let mut p = prefix.clone();
            p.push(PAT);
            let got = numbers(&t, &p, &col)?;
            ensure!(got == [pats, pats / n], "{p:?} in {arm}: got {got:?}, want [{pats}, {}]", pats / n);
            let mut p = prefix.clone();
            p.push("Total events");
            let events = adae.count(conds) as f64;
            let got = numbers(&t, &p, &col)?;
            ensure!(got == [events], "{p:?} in {arm}: got {got:?}, want {events}");
        }
        let terms = [
            (GI, "ABDOMINAL DISCOMFORT"),
            (GI, "ABDOMINAL FULLNESS DUE TO GAS"),
            (GI, "GINGIVAL BLEEDING"),
            (GI, "NAUSEA (INTERMITTENT)"),
            (MSK, "BACK PAIN"),
            (MSK, "WEAKNESS"),
        ];
        for (body, term) in terms {
            let want = adae.distinct(&[("ARM", arm), ("AEBODSYS", body), ("AEDECOD", term)], "USUBJID") as f64;
            let got = numbers(&t, &["AEBODSYS", body, "AEDECOD", term], &col)?;
            ensure!(got == [want], "{term} in {arm}: got {got:?}, want {want}");
        }
    }
    // Values printed in the published figure.
    let spot = [
        (vec!["USUBJID", PAT], "ARM A", "114 (78.08%)"),
        (vec!["USUBJID", "Total events"], "ARM A", "2060"),
        (vec!["USUBJID", "Total events"], "ARM B", "1058"),
        (vec!["AEBODSYS", MSK, "@content", PAT], "ARM A", "113 (77.40%)"),
        (vec!["AEBODSYS", GI, "AEDECOD", "NAUSEA (INTERMITTENT)"], "ARM B", "109"),
        (vec!["AEBODSYS", MSK, "AEDECOD", "WEAKNESS"], "ARM B", "123"),
    ];
    for (row, arm, want) in spot {
        let row: Vec<String> = row.iter().map(|s| s.to_string()).collect();
        let got = t
            .cell_at(&row, &["ARM".to_string(), arm.to_string()])
            .map_err(|e| e.to_string())?
            .formatted();
        ensure!(got == want, "{row:?} in {arm}: {got:?}, figure shows {want:?}");
    }
    Ok(())
}

fn bep_structure() -> Result<(), String> {
    let t = bep_table();
    check_structure(
        &t,
        &Expected {
            name: "overlapping columns",
            header: vec![vec!["ARM A", "ARM B"], vec!["BEP", "All", "BEP", "All", "Overall"]],
            counts: Some(vec!["(N=41)", "(N=96)", "(N=48)", "(N=94)", "(N=190)"]),
            labels: vec!["SEX", "  F", "  M", "AGE", "  Mean", "  sd"],
        },
    )?;
    let raw = Raw::load("adsl2");
    let cols: Vec<Selection<'_>> = vec![
        (vec!["ARMCD", "ARM A", "BEP", "BEP"], vec![("ARMCD", "ARM A"), ("BEP", "BEP")]),
        (vec!["ARMCD", "ARM A", "BEP", "ALL"], vec![("ARMCD", "ARM A")]),
        (vec!["ARMCD", "ARM B", "BEP", "BEP"], vec![("ARMCD", "ARM B"), ("BEP", "BEP")]),
        (vec!["ARMCD", "ARM B", "BEP", "ALL"], vec![("ARMCD", "ARM B")]),
        (vec!["Overall"], vec![]),
    ];
    for (col, conds) in &cols {
        let n = raw.count(conds) as f64;
        for sex in ["F", "M"] {
            let mut c = conds.clone();
            c.push(("SEX", sex));
            let k = raw.count(&c) as f64;
            let got = numbers(&t, &["SEX", sex], col)?;
            ensure!(got == [k, k / n], "SEX {sex} in {col:?}: got {got:?}, want [{k}, {}]", k / n);
        }
        let (m, sd) = mean_sd(&raw.numbers(conds, "AGE"));
        let got_m = numbers(&t, &["AGE", "Mean"], col)?[0];
        let got_sd = numbers(&t, &["AGE", "sd"], col)?[0];
        ensure!(close(got_m, m, 1e-9), "AGE mean in {col:?}: {got_m} vs {m}");
        ensure!(close(got_sd, sd, 1e-9), "AGE sd in {col:?}: {got_sd} vs {sd}");
    }
    Ok(())
}

fn diffvar_structure() -> Result<(), String> {
    let t = diffvar_table();
    check_structure(
        &t,
        &Expected {
            name: "multivariable columns",
            header: vec![vec!["ARM A", "ARM B"], vec!["AGE", "BMRKR1", "AGE", "BMRKR1"]],
            counts: None,
            labels: vec!["F", "  Mean", "  sd", "  Min - Max", "M", "  Mean", "  sd", "  Min - Max"],
        },
    )?;
    let raw = Raw::load("adsl2");
    for sex in ["F", "M"] {
        for arm in ["ARM A", "ARM B"] {
            for var in ["AGE", "BMRKR1"] {
                let v = raw.numbers(&[("SEX", sex), ("ARMCD", arm)], var);
                let (m, sd) = mean_sd(&v);
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let col = ["ARMCD", arm, "multivars", var];
                let got_m = numbers(&t, &["SEX", sex, "colvars", "Mean"], &col)?[0];
                let got_sd = numbers(&t, &["SEX", sex, "colvars", "sd"], &col)?[0];
                let got_mm = numbers(&t, &["SEX", sex, "colvars", "Min - Max"], &col)?;
                ensure!(close(got_m, m, 1e-9), "{sex}/{arm}/{var} mean {got_m} vs {m}");
                ensure!(close(got_sd, sd, 1e-9), "{sex}/{arm}/{var} sd {got_sd} vs {sd}");
                ensure!(got_mm == [lo, hi], "{sex}/{arm}/{var} range {got_mm:?} vs [{lo}, {hi}]");
            }
        }
    }
    Ok(())
}

pub const COMPARISON_ROWS: [&str; 4] = [
    "Diff Resp Rates (%)",
    "95% CI (Wald, with correction)",
    "p-value (Chi^2 Test)",
    "Odds Ratio (95% CI)",
];

fn refgroup_structure() -> Result<(), String> {
    let t = refgroup_table();
    let mut labels = vec!["Responders", "Non-Responders", "Response Analysis"];
    let indented: Vec<String> = COMPARISON_ROWS.iter().map(|r| format!("  {r}")).collect();
    labels.extend(indented.iter().map(String::as_str));
    check_structure(
        &t,
        &Expected {
            name: "reference group",
            header: vec![vec!["ARM A", "ARM B", "ARM C"]],
            counts: Some(vec!["(N=134)", "(N=134)", "(N=132)"]),
            labels,
        },
    )?;
    let raw = Raw::load("adrs");
    let rate = |arm: &str| {
        let n = raw.count(&[("ARMCD", arm)]);
        let r = raw.count(&[("ARMCD", arm), ("rsp", "TRUE")]);
        (r, n)
    };
    let (r0, n0) = rate("ARM A");
    for arm in ["ARM A", "ARM B", "ARM C"] {
        let col = ["ARMCD", arm];
        let (r, n) = rate(arm);
        let got = numbers(&t, &["rsp", "Responders"], &col)?;
        ensure!(
            got == [r as f64, r as f64 / n as f64],
            "responders in {arm}: {got:?} vs {r}/{n}"
        );
        for row in COMPARISON_ROWS {
            let cell = t
                .cell_at(&["is_rsp".to_string(), row.to_string()], &[col[0].to_string(), arm.to_string()])
                .map_err(|e| e.to_string())?;
            ensure!(cell.value.is_blank() == (arm == "ARM A"), "{row} in {arm}: blank mismatch");
        }
        if arm != "ARM A" {
            let diff = numbers(&t, &["is_rsp", COMPARISON_ROWS[0]], &col)?[0];
            let want = (r as f64 / n as f64 - r0 as f64 / n0 as f64) * 100.0;
            ensure!(close(diff, want, 1e-9), "rate difference in {arm}: {diff} vs {want}");
        }
    }
    let first = t.cell_at(&["rsp".into(), "Responders".into()], &["ARMCD".into(), "ARM A".into()]);
    ensure!(first.map(|c| c.formatted()).as_deref() == Ok("114.0 (85.1%)"), "ARM A responders cell");
    for (arm, want) in [("ARM B", "0.0006"), ("ARM C", "0.1436")] {
        let got = t
            .cell_at(&["is_rsp".into(), COMPARISON_ROWS[2].into()], &["ARMCD".into(), arm.into()])
            .map_err(|e| e.to_string())?
            .formatted();
        ensure!(got == want, "p-value in {arm}: {got}, figure shows {want}");
    }
    Ok(())
}

pub fn structural_reproduction() -> Check {
    ae_structure()?;
    bep_structure()?;
    diffvar_structure()?;
    refgroup_structure()?;
    Ok("4 example tables: headers, counts, labels and oracle cell values".into())
}

// ------------------------------------------------------------------ 4

pub fn check_random_case(case: &RandomCase) -> Result<TableTree, String> {
    let t = build_table(&case.layout(), &case.dataset()).map_err(|e| format!("seed {}: {e}", case.seed))?;
    let cols = case.expected_col_paths();
    ensure!(t.col_paths() == cols, "seed {}: columns {:?} vs {cols:?}", case.seed, t.col_paths());
    if case.n_col_splits > 0 {
        let counts = t.columns().counts();
        ensure!(counts == case.expected_counts(), "seed {}: column counts", case.seed);
    }
    let rows = case.expected_rows();
    let got_paths = t.row_paths();
    ensure!(
        got_paths.len() == rows.len(),
        "seed {}: {} rows vs {} expected",
        case.seed,
        got_paths.len(),
        rows.len()
    );
    for ((path, want), got_path) in rows.iter().zip(&got_paths) {
        ensure!(path == got_path, "seed {}: row {got_path:?}, expected {path:?}", case.seed);
        let row = t.row_at(path).map_err(|e| e.to_string())?;
        let is_count = path[path.len() - 2] == "a";
        for (j, (cell, w)) in row.cells.iter().zip(want).enumerate() {
            let got = cell.value.numbers();
            ensure!(got.len() == 1, "seed {}: {path:?} col {j} holds {got:?}", case.seed);
            let ok = if is_count { got[0] == *w } else { matches(got[0], *w, 1e-12) };
            ensure!(ok, "seed {}: {path:?} col {j}: {} vs oracle {w}", case.seed, got[0]);
        }
    }
    Ok(t)
}

pub fn random_tables(n: u64) -> Vec<RandomCase> {
    (0..n).map(|i| RandomCase::generate(0x5eed_0000 + i)).collect()
}

pub fn oracle_equivalence(n: u64) -> Check {
    let start = Instant::now();
    let mut cells = 0usize;
    for case in random_tables(n) {
        let t = check_random_case(&case)?;
        cells += t.row_paths().len() * t.n_cols();
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    Ok(format!("{n} random datasets, {cells} cells, {:.2} s", elapsed.as_secs_f64()))
}

// ------------------------------------------------------------------ 5

fn ctx(var: &str) -> SplitContext<'_> {
    SplitContext {
        var: Some(var),
        row_path: &[],
        col_path: &[],
    }
}

fn non_null_rows(ds: &Dataset, var: &str) -> Vec<usize> {
    let col = ds.column(var).expect("column");
    ds.row_ids()
        .iter()
        .zip(col.iter())
        .filter(|(_, v)| !v.is_null())
        .map(|(i, _)| *i)
        .collect()
}

pub fn check_partition(ds: &Dataset, var: &str) -> Result<(), String> {
    let facets = partition_by_levels(var).apply(ds, &ctx(var)).map_err(|e| e.to_string())?;
    let levels = ds.column(var).expect("column").levels().len();
    ensure!(facets.len() == levels, "{var}: {} facets for {levels} levels", facets.len());
    let mut all: Vec<usize> = facets.iter().flat_map(|f| f.data.row_ids().to_vec()).collect();
    let total = all.len();
    all.sort_unstable();
    all.dedup();
    ensure!(all.len() == total, "{var}: facets overlap");
    ensure!(all == non_null_rows(ds, var), "{var}: facets do not cover the non-null rows");
    Ok(())
}

pub fn check_combo(ds: &Dataset, var: &str, pick: &[usize]) -> Result<(), String> {
    let levels: Vec<String> = ds.column(var).expect("column").levels().iter().map(|s| s.to_string()).collect();
    let combo: Vec<String> = pick.iter().map(|&i| levels[i % levels.len()].clone()).collect();
    let f = add_combo_levels(
        vec![ComboLevel {
            valname: "COMBO".into(),
            label: "Combo".into(),
            levelcombo: combo.clone(),
        }],
        None,
    );
    let facets = f.apply(ds, &ctx(var)).map_err(|e| e.to_string())?;
    let combo_rows = facets.last().expect("combo facet").data.row_ids().to_vec();
    let mut union: Vec<usize> = facets
        .iter()
        .filter(|f| combo.contains(&f.name))
        .flat_map(|f| f.data.row_ids().to_vec())
        .collect();
    union.sort_unstable();
    union.dedup();
    ensure!(combo_rows == union, "{var}: combo of {combo:?} is not the union of its levels");
    Ok(())
}

pub fn check_quantiles(ds: &Dataset, var: &str, probs: &[f64]) -> Result<(), String> {
    let mut sorted: Vec<f64> = probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let facets = cumulative_quantile_split(var, sorted.clone())
        .apply(ds, &ctx(var))
        .map_err(|e| e.to_string())?;
    let mut vals: Vec<f64> = ds.column(var).expect("column").numbers().collect();
    vals.sort_by(f64::total_cmp);
    for w in facets.windows(2) {
        let (a, b) = (w[0].data.row_ids(), w[1].data.row_ids());
        ensure!(a.iter().all(|i| b.contains(i)), "{var}: facet {} not inside {}", w[0].name, w[1].name);
    }
    for (f, p) in facets.iter().zip(&sorted) {
        // Nearest rank, counted independently of the library helper.
        let want = if vals.is_empty() {
            0
        } else {
            let k = ((p * vals.len() as f64).ceil() as usize).max(1);
            let q = vals[k - 1];
            vals.iter().filter(|v| **v <= q).count()
        };
        ensure!(f.data.n_rows() == want, "{var} p={p}: {} rows, want {want}", f.data.n_rows());
    }
    Ok(())
}

pub fn split_invariants(n: u64) -> Check {
    let mut checked = 0;
    for case in random_tables(n) {
        let ds = case.dataset();
        for (i, var) in ["c0", "c1", "c2", "a"].iter().enumerate() {
            check_partition(&ds, var).map_err(|e| format!("seed {}: {e}", case.seed))?;
            check_combo(&ds, var, &[i, i + 2]).map_err(|e| format!("seed {}: {e}", case.seed))?;
        }
        check_quantiles(&ds, "y", &[0.1, 0.25, 0.5, 0.9, 1.0]).map_err(|e| format!("seed {}: {e}", case.seed))?;
        checked += 1;
    }
    Ok(format!("{checked} random datasets: partition, combo union and quantile nesting"))
}

// ------------------------------------------------------------------ 6

/// Every cell resolves through `cell_at` and its text sits in the rendered
/// line and column span the path implies.
pub fn check_paths_render(t: &TableTree) -> Result<usize, String> {
    let opts = RenderOptions::default();
    let text = render_text(t, &opts);
    let lines: Vec<Vec<char>> = text.lines().map(|l| l.chars().collect()).collect();
    let lay = compute_column_layout(t, &opts);
    let display = t.display_rows();
    let line_of: HashMap<&Vec<String>, usize> = display
        .iter()
        .enumerate()
        .filter(|(_, d)| d.kind != DisplayKind::Label)
        .map(|(i, d)| (&d.path, lay.header_lines() + i))
        .collect();
    let mut n = 0;
    for rp in t.row_paths() {
        let line = *line_of.get(&rp).ok_or_else(|| format!("row {rp:?} not displayed"))?;
        for (j, cp) in t.col_paths().iter().enumerate() {
            let cell = t.cell_at(&rp, cp).map_err(|e| format!("{rp:?} x {cp:?}: {e}"))?;
            let want = cell.formatted();
            let off = lay.offset(j);
            let got: String = lines[line]
                .iter()
                .skip(off)
                .take(lay.widths[j])
                .collect();
            ensure!(
                got.trim() == want,
                "{rp:?} x {cp:?}: rendered {:?}, cell {want:?}",
                got.trim()
            );
            n += 1;
        }
    }
    Ok(n)
}

pub fn path_round_trip(n_random: u64) -> Check {
    let mut cells = 0;
    for t in [mtcars_table(), ae_table(), bep_table(), diffvar_table(), refgroup_table()] {
        cells += check_paths_render(&t)?;
    }
    for case in random_tables(n_random) {
        let t = build_table(&case.layout(), &case.dataset()).map_err(|e| e.to_string())?;
        cells += check_paths_render(&t).map_err(|e| format!("seed {}: {e}", case.seed))?;
    }
    Ok(format!("{cells} cells resolved and located in rendered text"))
}

// ------------------------------------------------------------------ 7

/// Raw value and format of every data cell, sorted.
pub fn cell_multiset(t: &TableTree) -> Vec<String> {
    let mut v: Vec<String> = t
        .rows_with_paths()
        .iter()
        .flat_map(|(_, r)| r.cells.iter().map(|c| format!("{}\u{1}{}", c.value.to_raw_string(), c.format.source())))
        .collect();
    v.sort();
    v
}

fn fingerprint(t: &TableTree) -> String {
    format!("{t:?}")
}

fn node_total(item: tabula::SortItem<'_>) -> Result<f64, String> {
    let rows: Vec<&tabula::DataRow> = match item {
        tabula::SortItem::Node(n) => n.all_rows(),
        tabula::SortItem::Row(r) => vec![r],
    };
    Ok(rows.iter().flat_map(|r| r.numbers()).filter(|x| x.is_finite()).sum())
}

/// Applies every manipulation available on `t` and checks persistence,
/// the sort multiset and prune identity.
pub fn check_manipulations(t: &TableTree, elementary: &[String], split: Option<&[String]>) -> Result<(), String> {
    let before = fingerprint(t);
    let cells = cell_multiset(t);

    for dec in [false, true] {
        let s = t
            .sort_at_path(elementary, column_score(0, None), dec)
            .map_err(|e| e.to_string())?;
        ensure!(cell_multiset(&s) == cells, "sorting {elementary:?} changed the cell multiset");
        if let Some(p) = split {
            let s = t.sort_at_path(p, node_total, dec).map_err(|e| e.to_string())?;
            ensure!(cell_multiset(&s) == cells, "sorting {p:?} changed the cell multiset");
        }
    }
    let same = t.prune_table(|_: &TableNode| false);
    ensure!(fingerprint(&same) == before, "prune with a false predicate changed the table");
    let _ = t.prune_zero();

    let template = t.row_at(&t.row_paths()[0]).map_err(|e| e.to_string())?.clone();
    let mut extra = template.clone();
    extra.name = "inserted".into();
    extra.label = "Inserted".into();
    let first = t.row_paths()[0].clone();
    let ins = t
        .insert_row_at_path(&first, extra, InsertPosition::After)
        .map_err(|e| e.to_string())?;
    ensure!(ins.row_paths().len() == t.row_paths().len() + 1, "insert did not add a row");
    for p in t.row_paths() {
        ensure!(format!("{:?}", ins.row_at(&p).ok()) == format!("{:?}", t.row_at(&p).ok()), "insert changed untouched row {p:?}");
    }
    let cp = t.col_paths()[0].clone();
    let _ = t.add_footnote_at_path(&first, Some(&cp), "note").map_err(|e| e.to_string())?;
    let _ = t.add_footnote_at_path(&first, None, "note").map_err(|e| e.to_string())?;
    let fmt = template.cells[0].format.source().to_string();
    let _ = t.with_format_at_path(&first, None, &fmt).map_err(|e| e.to_string())?;
    let _ = t.subset(&[], &cp).map_err(|e| e.to_string())?;

    ensure!(fingerprint(t) == before, "an operation mutated its input table");
    Ok(())
}

pub fn manipulation_safety(n: u64) -> Check {
    let ae = ae_table();
    let gi: Vec<String> = ["AEBODSYS", GI, "AEDECOD"].iter().map(|s| s.to_string()).collect();
    check_manipulations(&ae, &gi, Some(&["AEBODSYS".to_string()]))?;
    let mut k = 1;
    for case in random_tables(n) {
        let t = build_table(&case.layout(), &case.dataset()).map_err(|e| e.to_string())?;
        let first = &t.row_paths()[0];
        let elementary = first[..first.len() - 1].to_vec();
        let split = case.row_vars().first().map(|v| vec![v.to_string()]);
        check_manipulations(&t, &elementary, split.as_deref()).map_err(|e| format!("seed {}: {e}", case.seed))?;
        k += 1;
    }
    Ok(format!("{k} tables: sort multiset, prune identity, persistence"))
}

// ------------------------------------------------------------------ 8

type RecordKey = (Vec<String>, String, String);

pub fn check_pivot(t: &TableTree) -> Result<usize, String> {
    let recs = read_ard(ard_to_csv_string(&as_ard(t)).as_bytes()).map_err(|e| e.to_string())?;
    let mut pivot: HashMap<RecordKey, HashMap<Vec<String>, String>> = HashMap::new();
    for r in &recs {
        let key = (r.row_path.clone(), r.row_label.clone(), r.stat_label.clone());
        let prev = pivot.entry(key).or_default().insert(r.col_path.clone(), r.raw_value.clone());
        ensure!(prev.is_none(), "duplicate record at {:?} x {:?}", r.full_row_path(), r.col_path);
    }
    let cols = t.col_paths();
    let mut expected = 0;
    for (path, row) in t.rows_with_paths() {
        let key = (path[..path.len() - 1].to_vec(), row.label.clone(), row.name.clone());
        for (cell, cp) in row.cells.iter().zip(&cols) {
            let got = pivot.get(&key).and_then(|m| m.get(cp));
            if cell.value.is_blank() {
                ensure!(got.is_none(), "blank cell {path:?} x {cp:?} exported");
                continue;
            }
            expected += 1;
            let got = got.ok_or_else(|| format!("cell {path:?} x {cp:?} missing from export"))?;
            ensure!(
                *got == cell.value.to_raw_string(),
                "{path:?} x {cp:?}: exported {got:?}, cell {:?}",
                cell.value.to_raw_string()
            );
            let back = CellValue::parse_raw(got);
            ensure!(
                back.numbers() == cell.value.numbers() || back.to_raw_string() == cell.value.to_raw_string(),
                "{path:?} x {cp:?}: raw value does not parse back"
            );
        }
    }
    ensure!(recs.len() == expected, "{} records, {expected} non-blank cells", recs.len());
    Ok(expected)
}

pub fn ard_pivot() -> Check {
    let mut n = 0;
    for t in [ae_table(), bep_table(), diffvar_table(), refgroup_table()] {
        n += check_pivot(&t)?;
    }
    Ok(format!("{n} records pivot back to their cells"))
}

// ------------------------------------------------------------------ 9

pub fn determinism() -> Check {
    let builds: [fn() -> TableTree; 5] = [mtcars_table, ae_table, bep_table, diffvar_table, refgroup_table];
    for b in builds {
        let (x, y) = (b(), b());
        let opts = RenderOptions::default();
        ensure!(render_text(&x, &opts) == render_text(&y, &opts), "rendered text differs");
        ensure!(ard_to_csv_string(&as_ard(&x)) == ard_to_csv_string(&as_ard(&y)), "ARD CSV differs");
    }
    Ok("5 tables built twice: identical text and ARD CSV".into())
}
