use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lltrunc::estimation::{Sample, fit};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lltrunc"))
}

fn bladder() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/bladder.txt")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(args: &[&str]) -> Vec<Value> {
    let text = stdout(&run(args));
    serde_json::from_str::<Vec<Value>>(&text).unwrap()
}

#[test]
fn ingest_drops_values_at_or_below_truncation() {
    let path = bladder();
    let rows = json(&["fit", "--input", path.to_str().unwrap(), "--xl", "0.25,1,6", "--format", "json"]);
    let counts: Vec<(u64, u64)> = rows
        .iter()
        .map(|r| (r["n"].as_u64().unwrap(), r["dropped"].as_u64().unwrap()))
        .collect();
    assert_eq!(counts, vec![(126, 2), (120, 8), (64, 64)]);
}

#[test]
fn gof_table_matches_published_row() {
    let path = bladder();
    let text = stdout(&run(&["gof", "--input", path.to_str().unwrap(), "--xl", "12"]));
    let line = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields, ["12", "31", "8.365", "2.277", "-103.85", "0.4877", "0.5129", "✓", "✓"]);
}

#[test]
fn json_carries_full_precision() {
    let path = bladder();
    let rows = json(&["gof", "--input", path.to_str().unwrap(), "--format", "json", "--levels", "85,95"]);
    let values: Vec<f64> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    let res = fit(&Sample::new(values, 0.0).unwrap()).unwrap();
    let r = res.outcome.regular().unwrap();
    let outcome = &rows[0]["fit"]["outcome"];
    assert_eq!(outcome["kind"], "regular");
    assert_eq!(outcome["alpha_hat"].as_f64().unwrap(), r.alpha_hat);
    assert_eq!(outcome["beta_hat"].as_f64().unwrap(), r.beta_hat);
    assert_eq!(outcome["loglik"].as_f64().unwrap(), r.loglik);
    let diag = &rows[0]["fit"]["diagnostics"];
    assert_eq!(diag["eta_hat"].as_f64(), Some(0.0));
    assert_eq!(diag["beta_c"].as_f64(), Some(0.0));
    let decisions = rows[0]["gof"]["decisions"].as_array().unwrap();
    assert_eq!(decisions.len(), 8);
}

#[test]
fn csv_has_one_line_per_truncation_point() {
    let path = bladder();
    let text = stdout(&run(&["gof", "--input", path.to_str().unwrap(), "--xl", "0,1", "--format", "csv"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("x_l,n,dropped,outcome"));
    assert!(lines[2].starts_with("1,120,8,regular,"));
}

#[test]
fn wide_pair_reports_pareto_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "pair.txt", "2\n5000\n");
    let out = run(&["gof", "--input", input.to_str().unwrap(), "--xl", "1"]);
    let text = stdout(&out);
    assert!(text.contains("boundary / Pareto limit"), "{text}");
    assert!(text.contains("0.2171"));

    let rows = json(&["fit", "--input", input.to_str().unwrap(), "--xl", "1", "--format", "json"]);
    let outcome = &rows[0]["fit"]["outcome"];
    assert_eq!(outcome["kind"], "pareto_boundary");
    let expected = 2.0 / (2f64.ln() + 5000f64.ln());
    assert!((outcome["beta0"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn all_equal_input_explains_missing_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "same.txt", "3\n3\n3\n");
    let text = stdout(&run(&["gof", "--input", input.to_str().unwrap(), "--xl", "1"]));
    assert!(text.contains("no finite maximum"), "{text}");
}

#[test]
fn bad_input_fails_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.txt", "value\n1.5\n2.5\noops\n");
    let out = run(&["fit", "--input", input.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");

    let out = run(&["fit", "--input", input.to_str().unwrap(), "--xl", "100"]);
    assert!(!out.status.success());
    let out = run(&["fit", "--input", "/nonexistent/file.txt"]);
    assert!(!out.status.success());
}

#[test]
fn sample_is_deterministic_and_above_truncation() {
    let args = ["sample", "--alpha", "2", "--beta", "3", "--xl", "1.5", "--n", "5", "--seed", "42"];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(a, b);
    let values: Vec<f64> = a.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 5);
    assert!(values.iter().all(|&v| v > 1.5));
    assert!(!run(&["sample", "--alpha", "-1", "--beta", "3", "--n", "5"]).status.success());
}

#[test]
fn sampled_data_refits_to_generator() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("draws.txt");
    stdout(&run(&[
        "sample", "--alpha", "1", "--beta", "2", "--xl", "1", "--n", "100000", "--seed", "9", "--out",
        data.to_str().unwrap(),
    ]));
    let rows = json(&["fit", "--input", data.to_str().unwrap(), "--xl", "1", "--format", "json"]);
    let beta = rows[0]["fit"]["outcome"]["beta_hat"].as_f64().unwrap();
    assert_eq!(rows[0]["n"].as_u64(), Some(100_000));
    assert!((beta - 2.0).abs() < 0.1, "{beta}");
}

#[test]
fn mc_critical_writes_a_loadable_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("crit.txt");
    let raw = dir.path().join("raw");
    let out = run(&[
        "mc-critical", "--n", "30", "--p-grid", "0", "--reps", "10000", "--seed", "3", "--levels", "95", "--quiet",
        "--out", table.to_str().unwrap(), "--raw", raw.to_str().unwrap(),
    ]);
    let summary = stdout(&out);
    let mut lines = summary.lines();
    assert!(lines.next().unwrap().starts_with("N\tp\tkept\tdiscarded\tfailed"));
    let cell: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(&cell[..5], ["30", "0", "10000", "0", "0"]);
    let ks: f64 = cell[6].split('±').next().unwrap().parse().unwrap();
    assert!((0.75..=0.79).contains(&ks), "{ks}");

    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.contains("# reps: 10000"));
    assert_eq!(std::fs::read_to_string(raw.join("ks_n30_p0.txt")).unwrap().lines().count(), 10000);

    let parsed = lltrunc::gof::CriticalTables::parse(&text).unwrap();
    let q = parsed.lookup(lltrunc::gof::TestKind::Ks, lltrunc::gof::Level::P95, 0.0, 30).unwrap();
    assert!((q - ks).abs() < 1e-4);

    let sample = dir.path().join("thirty.txt");
    stdout(&run(&["sample", "--alpha", "3", "--beta", "2", "--n", "30", "--out", sample.to_str().unwrap()]));
    let rows = json(&[
        "gof", "--input", sample.to_str().unwrap(), "--format", "json", "--levels", "95", "--tables",
        table.to_str().unwrap(),
    ]);
    let decisions = rows[0]["gof"]["decisions"].as_array().unwrap();
    let ks95 = decisions
        .iter()
        .find(|d| d["test"] == "KS" && d["level"] == 95)
        .unwrap();
    assert_eq!(ks95["critical_table"].as_f64(), Some(q));
}
