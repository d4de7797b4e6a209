//! Fixtures, the example layouts, stand-in analysis functions and a naive
//! oracle shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod checks;

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use tabula::{
    add_combo_levels, builtins, build_table, build_table_with, read_csv, trim_levels_in_group,
    AnalysisFunction, Analyze, BuildOptions, ColSplit, ComboLevel, Dataset, Layout, RowSplit,
    Schema, TableTree, Vcg, Visibility,
};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Loads `<name>.csv` with its schema sidecar.
pub fn load(name: &str) -> Dataset {
    let schema = Schema::load(fixture_path(&format!("{name}.schema.json"))).expect("schema");
    read_csv(fixture_path(&format!("{name}.csv")), Some(&schema)).expect("fixture csv")
}

// ---------------------------------------------------------------- layouts

pub fn mtcars_layout() -> Layout {
    Layout::basic_table(false)
        .split_cols_by("gear")
        .analyze(Analyze::new("am", builtins::counts()))
}

pub fn ae_layout() -> Layout {
    Layout::basic_table(true)
        .split_cols_by("ARM")
        .analyze(Analyze::new("USUBJID", builtins::events_patients()))
        .split_rows_by(
            RowSplit::new("AEBODSYS")
                .child_labels(Visibility::Visible)
                .split_fun(trim_levels_in_group("AEDECOD")),
        )
        .summarize_row_groups("USUBJID", builtins::events_patients())
        .expect("row split present")
        .analyze(
            Analyze::new("AEDECOD", builtins::counts_unique("USUBJID"))
                .show_labels(Visibility::Hidden)
                .indent_mod(-1),
        )
}

pub fn bep_layout() -> Layout {
    let combo = add_combo_levels(
        vec![ComboLevel {
            valname: "ALL".into(),
            label: "All".into(),
            levelcombo: vec!["BEP".into(), "Non-BEP".into()],
        }],
        Some(vec!["BEP".into(), "ALL".into()]),
    );
    Layout::basic_table(true)
        .split_cols_by("ARMCD")
        .split_cols_by(ColSplit::new("BEP").split_fun(combo))
        .add_overall_col("Overall")
        .analyze(Analyze::new("SEX", builtins::count_pct()))
        .analyze(Analyze::new("AGE", builtins::mean_sd()))
}

pub fn diffvar_layout() -> Layout {
    Layout::basic_table(false)
        .split_cols_by("ARMCD")
        .split_cols_by_multivar(&["AGE", "BMRKR1"])
        .expect("two variables")
        .split_rows_by("SEX")
        .analyze_colvars(AnalysisFunction::combine(vec![builtins::mean_sd(), builtins::min_max()]))
}

pub fn refgroup_layout() -> Layout {
    Layout::basic_table(true)
        .split_cols_by(ColSplit::new("ARMCD").ref_group("ARM A"))
        .analyze(Analyze::new("rsp", s_proportion()).show_labels(Visibility::Hidden))
        .analyze(
            Analyze::new("is_rsp", s_unstrat_resp())
                .show_labels(Visibility::Visible)
                .var_label("Response Analysis"),
        )
}

pub fn mtcars_table() -> TableTree {
    build_table(&mtcars_layout(), &load("mtcars")).expect("mtcars table")
}

pub fn ae_table() -> TableTree {
    let adsl = load("adsl");
    let opts = BuildOptions {
        alt_counts: Some(&adsl),
        ..BuildOptions::default()
    };
    build_table_with(&ae_layout(), &load("adae"), &opts).expect("ae table")
}

pub fn bep_table() -> TableTree {
    build_table(&bep_layout(), &load("adsl2")).expect("bep table")
}

pub fn diffvar_table() -> TableTree {
    build_table(&diffvar_layout(), &load("adsl2")).expect("diffvar table")
}

pub fn refgroup_table() -> TableTree {
    build_table(&refgroup_layout(), &load("adrs")).expect("refgroup table")
}

// ------------------------------------------------- stand-in user functions

fn responders(x: &tabula::ColumnSlice<'_>) -> (usize, usize) {
    let n = x.non_null_count();
    let r = x.iter().filter(|v| matches!(v, tabula::Value::Bool(true))).count();
    (r, n)
}

/// Responder and non-responder counts with their proportions.
pub fn s_proportion() -> AnalysisFunction {
    AnalysisFunction::new("s_proportion", |x, _| {
        let (r, n) = responders(x);
        let p = if n == 0 { 0.0 } else { r as f64 / n as f64 };
        Ok(Vcg::new()
            .row("Responders", vec![r as f64, p], "xx.x (xx.x%)")
            .row("Non-Responders", vec![(n - r) as f64, 1.0 - p], "xx.x (xx.x%)"))
    })
}

pub const Z975: f64 = 1.959963984540054;

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chisq1_upper(x: f64) -> f64 {
    libm::erfc((x / 2.0).sqrt())
}

/// Uncorrected Pearson chi-square p-value for a 2x2 table.
pub fn chisq_2x2(r1: usize, n1: usize, r2: usize, n2: usize) -> f64 {
    let (a, b, c, d) = (r1 as f64, (n1 - r1) as f64, r2 as f64, (n2 - r2) as f64);
    let n = a + b + c + d;
    let num = n * (a * d - b * c).powi(2);
    let den = (a + b) * (c + d) * (a + c) * (b + d);
    chisq1_upper(num / den)
}

/// Comparison of a column's response rate with the reference column's.
pub fn s_unstrat_resp() -> AnalysisFunction {
    AnalysisFunction::new("s_unstrat_resp", |x, ctx| {
        let labels = [
            ("Diff Resp Rates (%)", "xx.x"),
            ("95% CI (Wald, with correction)", "(xx.x, xx.x)"),
            ("p-value (Chi^2 Test)", "xx.xxxx"),
            ("Odds Ratio (95% CI)", "xx.xx (xx.xx - xx.xx)"),
        ];
        if ctx.in_reference_column {
            return Ok(labels.iter().fold(Vcg::new(), |v, (l, f)| v.blank_row(*l, *f)));
        }
        let reference = ctx.reference_data.ok_or("no reference group")?;
        let (r1, n1) = responders(x);
        let (r0, n0) = responders(&reference.try_column(ctx.analysis_var).map_err(|e| e.to_string())?);
        let (p1, p0) = (r1 as f64 / n1 as f64, r0 as f64 / n0 as f64);
        let diff = p1 - p0;
        let se = (p1 * (1.0 - p1) / n1 as f64 + p0 * (1.0 - p0) / n0 as f64).sqrt();
        let half = Z975 * se + 0.5 * (1.0 / n1 as f64 + 1.0 / n0 as f64);
        let or = (r1 as f64 * (n0 - r0) as f64) / ((n1 - r1) as f64 * r0 as f64);
        let se_log = (1.0 / r1 as f64 + 1.0 / (n1 - r1) as f64 + 1.0 / r0 as f64 + 1.0 / (n0 - r0) as f64).sqrt();
        Ok(Vcg::new()
            .row(labels[0].0, diff * 100.0, labels[0].1)
            .row(labels[1].0, vec![(diff - half) * 100.0, (diff + half) * 100.0], labels[1].1)
            .row(labels[2].0, chisq_2x2(r1, n1, r0, n0), labels[2].1)
            .row(
                labels[3].0,
                vec![or, (or.ln() - Z975 * se_log).exp(), (or.ln() + Z975 * se_log).exp()],
                labels[3].1,
            ))
    })
}

// ----------------------------------------------------------------- oracle

/// Fixture rows as plain string maps, read without the library.
pub struct Raw {
    pub rows: Vec<HashMap<String, String>>,
}

impl Raw {
    pub fn load(name: &str) -> Raw {
        let mut r = csv::Reader::from_path(fixture_path(&format!("{name}.csv"))).expect("csv");
        let headers = r.headers().expect("header").clone();
        let rows = r
            .records()
            .map(|rec| {
                let rec = rec.expect("record");
                headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
            })
            .collect();
        Raw { rows }
    }

    pub fn filter(&self, conds: &[(&str, &str)]) -> Vec<&HashMap<String, String>> {
        self.rows
            .iter()
            .filter(|r| conds.iter().all(|(k, v)| r.get(*k).map(String::as_str) == Some(*v)))
            .collect()
    }

    pub fn count(&self, conds: &[(&str, &str)]) -> usize {
        self.filter(conds).len()
    }

    pub fn distinct(&self, conds: &[(&str, &str)], key: &str) -> usize {
        self.filter(conds).iter().map(|r| r[key].as_str()).collect::<HashSet<_>>().len()
    }

    pub fn numbers(&self, conds: &[(&str, &str)], var: &str) -> Vec<f64> {
        self.filter(conds)
            .iter()
            .filter_map(|r| r[var].parse::<f64>().ok())
            .collect()
    }
}

/// Two-pass mean and sample standard deviation.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    (m, (ss / (n - 1.0)).sqrt())
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Header, count and body lines of a rendered table, split at the rule.
pub fn split_render(text: &str) -> (Vec<String>, Vec<String>) {
    let lines: Vec<String> = text.lines().map(str::to_string).collect();
    let rule = lines
        .iter()
        .position(|l| !l.is_empty() && l.chars().all(|c| c == '-'))
        .expect("separator line");
    (lines[..rule].to_vec(), lines[rule + 1..].to_vec())
}

/// Whitespace-separated words of a header line, with multi-word labels
/// kept whole when separated by a single space.
pub fn header_words(line: &str) -> Vec<String> {
    line.split("  ")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Label column text of each body line.
pub fn row_labels(body: &[String], label_width: usize) -> Vec<String> {
    body.iter()
        .map(|l| l.chars().take(label_width).collect::<String>().trim_end().to_string())
        .collect()
}
