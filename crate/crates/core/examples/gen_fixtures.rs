//! Regenerates the CSV fixtures under `tests/fixtures`.
//!
//! The clinical datasets are synthetic. Their group sizes are chosen so the
//! example tables have the published column counts and, for the adverse
//! event table, the published cell values.
//!
//! Run with `cargo run -p tabula --example gen_fixtures`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use tabula::{dataset::to_csv_string, Column, Dataset, Schema};

const MTCARS: &str = "\
model,mpg,cyl,disp,hp,drat,wt,qsec,vs,am,gear,carb
Mazda RX4,21,6,160,110,3.9,2.62,16.46,0,1,4,4
Mazda RX4 Wag,21,6,160,110,3.9,2.875,17.02,0,1,4,4
Datsun 710,22.8,4,108,93,3.85,2.32,18.61,1,1,4,1
Hornet 4 Drive,21.4,6,258,110,3.08,3.215,19.44,1,0,3,1
Hornet Sportabout,18.7,8,360,175,3.15,3.44,17.02,0,0,3,2
Valiant,18.1,6,225,105,2.76,3.46,20.22,1,0,3,1
Duster 360,14.3,8,360,245,3.21,3.57,15.84,0,0,3,4
Merc 240D,24.4,4,146.7,62,3.69,3.19,20,1,0,4,2
Merc 230,22.8,4,140.8,95,3.92,3.15,22.9,1,0,4,2
Merc 280,19.2,6,167.6,123,3.92,3.44,18.3,1,0,4,4
Merc 280C,17.8,6,167.6,123,3.92,3.44,18.9,1,0,4,4
Merc 450SE,16.4,8,275.8,180,3.07,4.07,17.4,0,0,3,3
Merc 450SL,17.3,8,275.8,180,3.07,3.73,17.6,0,0,3,3
Merc 450SLC,15.2,8,275.8,180,3.07,3.78,18,0,0,3,3
Cadillac Fleetwood,10.4,8,472,205,2.93,5.25,17.98,0,0,3,4
Lincoln Continental,10.4,8,460,215,3,5.424,17.82,0,0,3,4
Chrysler Imperial,14.7,8,440,230,3.23,5.345,17.42,0,0,3,4
Fiat 128,32.4,4,78.7,66,4.08,2.2,19.47,1,1,4,1
Honda Civic,30.4,4,75.7,52,4.93,1.615,18.52,1,1,4,2
Toyota Corolla,33.9,4,71.1,65,4.22,1.835,19.9,1,1,4,1
Toyota Corona,21.5,4,120.1,97,3.7,2.465,20.01,1,0,3,1
Dodge Challenger,15.5,8,318,150,2.76,3.52,16.87,0,0,3,2
AMC Javelin,15.2,8,304,150,3.15,3.435,17.3,0,0,3,2
Camaro Z28,13.3,8,350,245,3.73,3.84,15.41,0,0,3,4
Pontiac Firebird,19.2,8,400,175,3.08,3.845,17.05,0,0,3,2
Fiat X1-9,27.3,4,79,66,4.08,1.935,18.9,1,1,4,1
Porsche 914-2,26,4,120.3,91,4.43,2.14,16.7,0,1,5,2
Lotus Europa,30.4,4,95.1,113,3.77,1.513,16.9,1,1,5,2
Ford Pantera L,15.8,8,351,264,4.22,3.17,14.5,0,1,5,4
Ferrari Dino,19.7,6,145,175,3.62,2.77,15.5,0,1,5,6
Maserati Bora,15,8,301,335,3.54,3.57,14.6,0,1,5,8
Volvo 142E,21.4,4,121,109,4.11,2.78,18.6,1,1,4,2
";

fn out_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn write(name: &str, text: &str) {
    let path = out_dir().join(name);
    fs::write(&path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    println!("wrote {}", path.display());
}

fn write_data(name: &str, ds: &Dataset) {
    write(&format!("{name}.csv"), &to_csv_string(ds));
    let mut schema = Schema::from_dataset(ds).to_json();
    schema.push('\n');
    write(&format!("{name}.schema.json"), &schema);
}

fn cat(name: &str, values: &[String], levels: &[&str]) -> Column {
    let v: Vec<Option<&str>> = values.iter().map(|s| Some(s.as_str())).collect();
    Column::categorical(name, &v, Some(levels.iter().map(|s| s.to_string()).collect()))
}

/// Applies one shuffled row order to every column.
fn shuffled(columns: Vec<Vec<String>>, rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let n = columns[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    columns
        .into_iter()
        .map(|c| order.iter().map(|&i| c[i].clone()).collect())
        .collect()
}

fn mtcars() {
    // Transmission recoded the way the published frequency table labels it.
    let mut out = String::new();
    for (i, line) in MTCARS.lines().enumerate() {
        let mut f: Vec<String> = line.split(',').map(str::to_string).collect();
        if i > 0 {
            f[9] = if f[9] == "0" { "Man" } else { "Auto" }.to_string();
        }
        out.push_str(&f.join(","));
        out.push('\n');
    }
    write("mtcars.csv", &out);
    write(
        "mtcars.schema.json",
        r#"{
  "am": {"kind": "categorical", "levels": ["Man", "Auto"]},
  "gear": {"kind": "categorical", "levels": ["3", "4", "5"]}
}
"#,
    );
}

const GI: &str = "GASTROINTESTINAL";
const MSK: &str = "MUSCULOSKELETAL AND CONNECTIVE TISSUE";
const TERMS: [(&str, &str); 6] = [
    (GI, "ABDOMINAL DISCOMFORT"),
    (GI, "ABDOMINAL FULLNESS DUE TO GAS"),
    (GI, "GINGIVAL BLEEDING"),
    (GI, "NAUSEA (INTERMITTENT)"),
    (MSK, "BACK PAIN"),
    (MSK, "WEAKNESS"),
];

struct ArmPlan {
    arm: &'static str,
    prefix: &'static str,
    n: usize,
    /// Subject index ranges per term, in `TERMS` order.
    terms: [std::ops::Range<usize>; 6],
    /// Total events per body system (GI, MSK).
    events: [usize; 2],
}

fn adverse_events(rng: &mut ChaCha8Rng) {
    let plans = [
        ArmPlan {
            arm: "ARM A",
            prefix: "A",
            n: 146,
            terms: [0..106, 7..114, 0..92, 0..110, 0..73, 2..113],
            events: [1344, 716],
        },
        ArmPlan {
            arm: "ARM B",
            prefix: "B",
            n: 154,
            terms: [0..84, 22..120, 0..73, 0..109, 93..140, 15..138],
            events: [675, 383],
        },
    ];
    let (mut sid, mut sarm) = (Vec::new(), Vec::new());
    let mut cols: Vec<Vec<String>> = vec![Vec::new(); 4];
    for p in &plans {
        for i in 0..p.n {
            sid.push(format!("{}-{:03}", p.prefix, i + 1));
            sarm.push(p.arm.to_string());
        }
        for (b, body) in [GI, MSK].iter().enumerate() {
            // One event per subject and term, extras dealt round-robin.
            let pairs: Vec<(usize, &str)> = TERMS
                .iter()
                .zip(&p.terms)
                .filter(|((s, _), _)| s == body)
                .flat_map(|((_, t), r)| r.clone().map(move |i| (i, *t)))
                .collect();
            for k in 0..p.events[b] {
                let (i, term) = pairs[k % pairs.len()];
                cols[0].push(format!("{}-{:03}", p.prefix, i + 1));
                cols[1].push(p.arm.to_string());
                cols[2].push(body.to_string());
                cols[3].push(term.to_string());
            }
        }
    }
    let arms = ["ARM A", "ARM B"];
    let adsl = Dataset::new(vec![
        Column::string("USUBJID", &sid.iter().map(|s| Some(s.as_str())).collect::<Vec<_>>()),
        cat("ARM", &sarm, &arms),
    ])
    .unwrap();
    write_data("adsl", &adsl);

    let cols = shuffled(cols, rng);
    let terms: Vec<&str> = TERMS.iter().map(|(_, t)| *t).collect();
    let adae = Dataset::new(vec![
        Column::string("USUBJID", &cols[0].iter().map(|s| Some(s.as_str())).collect::<Vec<_>>()),
        cat("ARM", &cols[1], &arms),
        cat("AEBODSYS", &cols[2], &[GI, MSK]),
        cat("AEDECOD", &cols[3], &terms),
    ])
    .unwrap();
    write_data("adae", &adae);
}

fn adsl2(rng: &mut ChaCha8Rng) {
    // (arm, subjects, BEP subjects, BEP females)
    let plan = [("ARM A", 96, 41, 27), ("ARM B", 94, 48, 29)];
    let age = Normal::new(35.0, 7.5).unwrap();
    let bmrkr = LogNormal::new(1.55, 0.6).unwrap();
    let mut cols: Vec<Vec<String>> = vec![Vec::new(); 6];
    let mut k = 0;
    for (arm, n, bep, bep_f) in plan {
        for i in 0..n {
            k += 1;
            let is_bep = i < bep;
            let female = if is_bep { i < bep_f } else { rng.random_bool(0.55) };
            let a: f64 = age.sample(rng);
            let b: f64 = bmrkr.sample(rng);
            cols[0].push(format!("S-{k:03}"));
            cols[1].push(arm.to_string());
            cols[2].push(if female { "F" } else { "M" }.to_string());
            cols[3].push(if is_bep { "BEP" } else { "Non-BEP" }.to_string());
            cols[4].push(format!("{}", a.round().clamp(23.0, 62.0)));
            cols[5].push(format!("{:.1}", b.clamp(0.1, 25.0)));
        }
    }
    let cols = shuffled(cols, rng);
    let num = |c: &[String]| -> Vec<Option<f64>> { c.iter().map(|s| Some(s.parse().unwrap())).collect() };
    let ds = Dataset::new(vec![
        Column::string("USUBJID", &cols[0].iter().map(|s| Some(s.as_str())).collect::<Vec<_>>()),
        cat("ARMCD", &cols[1], &["ARM A", "ARM B"]),
        cat("SEX", &cols[2], &["F", "M"]),
        cat("BEP", &cols[3], &["BEP", "Non-BEP"]),
        Column::numeric("AGE", &num(&cols[4])),
        Column::numeric("BMRKR1", &num(&cols[5])),
    ])
    .unwrap();
    write_data("adsl2", &ds);
}

fn adrs(rng: &mut ChaCha8Rng) {
    // Responder counts reproduce the published chi-square p-values.
    let plan = [("ARM A", 134, 114), ("ARM B", 134, 90), ("ARM C", 132, 120)];
    let mut cols: Vec<Vec<String>> = vec![Vec::new(); 3];
    let mut k = 0;
    for (arm, n, responders) in plan {
        for i in 0..n {
            k += 1;
            cols[0].push(format!("R-{k:03}"));
            cols[1].push(arm.to_string());
            cols[2].push(if i < responders { "TRUE" } else { "FALSE" }.to_string());
        }
    }
    let cols = shuffled(cols, rng);
    let flags: Vec<Option<bool>> = cols[2].iter().map(|s| Some(s == "TRUE")).collect();
    let ds = Dataset::new(vec![
        Column::string("USUBJID", &cols[0].iter().map(|s| Some(s.as_str())).collect::<Vec<_>>()),
        cat("ARMCD", &cols[1], &["ARM A", "ARM B", "ARM C"]),
        Column::boolean("rsp", &flags),
        Column::boolean("is_rsp", &flags),
    ])
    .unwrap();
    write_data("adrs", &ds);
}

fn main() {
    fs::create_dir_all(out_dir()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    mtcars();
    adverse_events(&mut rng);
    adsl2(&mut rng);
    adrs(&mut rng);
}
