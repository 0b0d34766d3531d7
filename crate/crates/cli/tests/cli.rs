use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qfrac(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qfrac"));
    cmd.args(args).current_dir(dir).env_remove("QFRAC_MAX_TERMS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn setup(config: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), config).unwrap();
    dir
}

fn run(config: &str, command: &str, extra: &[&str]) -> (TempDir, Output) {
    let dir = setup(config);
    let mut args = vec![command, "--config", "run.conf"];
    args.extend_from_slice(extra);
    let out = qfrac(dir.path(), &args, &[]);
    (dir, out)
}

fn rows(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn gamma_oracle(t: f64, q: f64) -> f64 {
    let mut ratio = 1.0;
    let mut qk = 1.0;
    while qk > 1e-300 {
        ratio *= (1.0 - qk * q) / (1.0 - q.powf(t) * qk);
        qk *= q;
    }
    ratio * (1.0 - q).powf(1.0 - t)
}

#[test]
fn eval_integral_of_one() {
    let (_dir, out) = run("operator = J\nfunction = 1\nq = 0.5\np = 1\nalpha = 0.5\n", "eval", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("x,value\n"));
    let table = rows(&text);
    assert_eq!(table.len(), 12);
    let g = gamma_oracle(1.5, 0.5);
    for (x, v) in table {
        assert!((v - x.sqrt() / g).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn eval_caputo_of_constant() {
    let (_dir, out) = run("operator = caputo\nfunction = 1\n", "eval", &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(rows(&stdout(&out)).iter().all(|&(_, v)| v == 0.0));
}

#[test]
fn malformed_function_exits_2() {
    let (_dir, out) = run("function = x +\n", "eval", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("1:4: expected expression"));
}

#[test]
fn config_errors_exit_2() {
    for text in ["qq = 1\n", "q = 0.5\nq = 0.4\n", "alpha = 1.5\n", "q = 2\n"] {
        let (_dir, out) = run(text, "eval", &[]);
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
    let dir = tempfile::tempdir().unwrap();
    let out = qfrac(dir.path(), &["eval", "--config", "missing.conf"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn max_terms_override() {
    let dir = setup("function = 1\n");
    let out = qfrac(dir.path(), &["eval", "--config", "run.conf"], &[("QFRAC_MAX_TERMS", "3")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("operator J at x="));
    let out = qfrac(dir.path(), &["eval", "--config", "run.conf"], &[("QFRAC_MAX_TERMS", "lots")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_zero_rhs() {
    let (dir, out) = run("rhs = 0\nzeta = 0.5\n", "solve", &["--out", "sol.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&std::fs::read_to_string(dir.path().join("sol.csv")).unwrap());
    assert_eq!(table.len(), 13);
    assert!(table.iter().all(|&(_, u)| u == 0.5));
    assert_eq!(table.last().unwrap().0, 0.0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sol.csv.report.json")).unwrap()).unwrap();
    assert_eq!(report["iterations_used"], 1);
    assert_eq!(report["converged"], true);
    for key in ["schema", "config", "residuals", "apriori_bounds", "k_estimate"] {
        assert!(report.get(key).is_some(), "{key}");
    }
}

#[test]
fn solve_matches_series() {
    let config = "q = 0.5\np = 2\nalpha = 0.5\nrhs = u\nzeta = 1\nmax_iter = 200\nm_terms = 200\n";
    let (_dir, solved) = run(config, "solve", &[]);
    assert_eq!(solved.status.code(), Some(0));
    let (_dir, series) = run(config, "ml", &[]);
    assert_eq!(series.status.code(), Some(0));
    let u = rows(&stdout(&solved));
    let s = rows(&stdout(&series));
    assert_eq!(u.len(), s.len() + 1);
    for ((x1, v1), (x2, v2)) in u.iter().zip(&s) {
        assert_eq!(x1, x2);
        assert!((v1 - v2).abs() < 1e-9);
    }
    // report goes to stderr when the table goes to stdout
    let report: Value = serde_json::from_str(&stderr(&solved)).unwrap();
    assert_eq!(report["schema"], 1);
}

#[test]
fn solve_trust_region_exit_5() {
    let (_dir, out) = run("rhs = u*u\nr = 0.01\n", "solve", &[]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr(&out).contains("node"));
}

#[test]
fn solve_max_iter_exit_4_with_report() {
    let (dir, out) = run("rhs = u\nmax_iter = 3\n", "solve", &["--out", "sol.json", "--format", "json"]);
    assert_eq!(out.status.code(), Some(4));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sol.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], false);
    assert_eq!(report["iterations_used"], 3);
    assert_eq!(report["residuals"].as_array().unwrap().len(), 3);
}

#[test]
fn solve_report_round_trip() {
    let (dir, out) = run("rhs = u + sin(t)\nq = 0.7\nmax_iter = 200\n", "solve", &["--out", "first.json", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let first = std::fs::read_to_string(dir.path().join("first.json")).unwrap();
    let report: Value = serde_json::from_str(&first).unwrap();
    let text: String = report["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.as_str().unwrap()))
        .collect();
    std::fs::write(dir.path().join("again.conf"), text).unwrap();
    let out = qfrac(dir.path(), &["solve", "--config", "again.conf", "--out", "second.json", "--format", "json"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(first, std::fs::read_to_string(dir.path().join("second.json")).unwrap());
}

#[test]
fn ml_examples() {
    let (_dir, out) = run("m_terms = 0\n", "ml", &[]);
    assert!(rows(&stdout(&out)).iter().all(|&(_, v)| v == 1.0));
    let (_dir, out) = run("alpha = 1\np = 1\nq = 0.99\nm_terms = 80\nlattice_depth = 40\n", "ml", &[]);
    assert_eq!(out.status.code(), Some(0));
    for (x, v) in rows(&stdout(&out)) {
        assert!((v - x.exp()).abs() < 1e-2, "x={x}");
    }
}

#[test]
fn verify_subset_and_fault_injection() {
    let (_dir, out) = run("q = 0.5\np = 1\n", "verify", &[]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let results = report["identity_results"].as_array().unwrap();
    assert_eq!(results.len(), 9);
    assert!(results.iter().all(|r| r["passed"] == true));
    assert_eq!(report["config"]["q"], "0.5");

    let (_dir, out) = run("q = 0.5\np = 1\n", "verify", &["--inject-fault", "caputo_equivalence"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("caputo_equivalence"));

    let (_dir, out) = run("q = 0.5\n", "verify", &["--inject-fault", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}
