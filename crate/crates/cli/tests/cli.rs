use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ccef_core::copula::{Fgm, FrechetUpper};
use ccef_core::mc::sample;
use ccef_core::Copula;
use tempfile::TempDir;

fn ccef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccef")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn write_sample(dir: &Path, name: &str, copula: &dyn Copula, n: usize, seed: u64) -> PathBuf {
    let s = sample(copula, n, seed).unwrap();
    let mut text = String::from("x,y\n");
    for (x, y) in s.pairs() {
        text.push_str(&format!("{x},{y}\n"));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn eval_independence_is_constant() {
    let o = ccef(&["eval", "--model", r#"{"family":"independence"}"#]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("u,value,provenance\n"));
    assert!(!text.contains('\r'));
    let r = rows(&text);
    assert_eq!(r.len(), 19);
    assert!(r.iter().all(|row| row[1].parse::<f64>().unwrap() == 0.5 && row[2] == "exact"));
}

#[test]
fn eval_fgm_closed_and_integral_agree() {
    let model = r#"{"family":"fgm","theta":1}"#;
    let closed = ccef(&["eval", "--model", model, "--method", "closed"]);
    let integral = ccef(&["eval", "--model", model, "--method", "integral"]);
    let (a, b) = (rows(&String::from_utf8(closed.stdout).unwrap()), rows(&String::from_utf8(integral.stdout).unwrap()));
    for (x, y) in a.iter().zip(&b) {
        let (x, y): (f64, f64) = (x[1].parse().unwrap(), y[1].parse().unwrap());
        assert!((x - y).abs() < 1e-8);
    }
    let half = a.iter().find(|r| r[0] == "0.5").unwrap();
    assert!((half[1].parse::<f64>().unwrap() - 0.416_667).abs() < 1e-6);
}

#[test]
fn eval_writes_manifest_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("curve.csv");
    let o = ccef(&["eval", "--model", r#"{"family":"m"}"#, "--method", "bernstein", "--m", "20", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&out).unwrap().contains("bernstein(20)"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("curve.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "eval");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["generator"], "chacha8");
    assert_eq!(manifest["config"]["method"], "bernstein");
    assert!(manifest["timestamp"].is_string() && manifest["version"].is_string());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&ccef(&["eval", "--model", "{not json"])), 2);
    assert_eq!(code(&ccef(&["eval", "--model", r#"{"family":"fgm","theta":3}"#])), 2);
    assert_eq!(code(&ccef(&["eval", "--model", r#"{"family":"m"}"#, "--method", "polynomial"])), 2);
    assert_eq!(code(&ccef(&["eval", "--model", r#"{"family":"m"}"#, "--grid", "0:1:0.1"])), 2);
    assert_eq!(code(&ccef(&["eval", "--model", r#"{"family":"m"}"#, "--method", "simpson"])), 2);
}

#[test]
fn approx_sweep_columns() {
    let o = ccef(&["approx", "--model", r#"{"family":"fgm","theta":1}"#, "--m-list", "10,20", "--grid", "0.2:0.8:0.3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("u,m,value,abs_error,bound\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 6);
    for row in &r {
        let (err, bound): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
        assert!(err <= bound);
    }
    let no_bound = ccef(&["approx", "--model", r#"{"family":"w"}"#, "--m-list", "10"]);
    assert_eq!(code(&no_bound), 0);
}

#[test]
fn estimate_rejects_tiny_and_malformed_files() {
    let dir = TempDir::new().unwrap();
    let tiny = dir.path().join("tiny.csv");
    fs::write(&tiny, "0.1,0.2\n0.3,0.4\n").unwrap();
    assert_eq!(code(&ccef(&["estimate", tiny.to_str().unwrap()])), 2);

    let bad = dir.path().join("bad.csv");
    let mut text = String::from("x,y\n");
    for i in 0..20 {
        text.push_str(&format!("{},{}\n", i, 20 - i));
    }
    text.push_str("oops,1\n");
    fs::write(&bad, text).unwrap();
    let o = ccef(&["estimate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 22"));
}

#[test]
fn estimate_reports_empty_support() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("small.csv");
    let text: String = (1..=10).map(|i| format!("{i},{}\n", 11 - i)).collect();
    fs::write(&path, text).unwrap();
    assert_eq!(code(&ccef(&["estimate", path.to_str().unwrap(), "--grid", "0.05:0.5:0.05"])), 4);
    assert_eq!(code(&ccef(&["estimate", path.to_str().unwrap(), "--grid", "0.2:0.5:0.1"])), 0);
}

#[test]
fn estimate_comonotone_sample() {
    let dir = TempDir::new().unwrap();
    let data = write_sample(dir.path(), "m.csv", &FrechetUpper, 2000, 1);
    let o = ccef(&["estimate", data.to_str().unwrap(), "--grid", "0.5:0.5:0.1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    let r_hat: f64 = r[0][1].parse().unwrap();
    assert!((r_hat - 0.25).abs() < 0.02, "{r_hat}");
}

#[test]
fn estimate_fgm_bands_are_reproducible_and_close() {
    let dir = TempDir::new().unwrap();
    let truth = Fgm::new(1.0).unwrap();
    let data = write_sample(dir.path(), "fgm.csv", &truth, 5000, 2024);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = ccef(&[
            "estimate", data.to_str().unwrap(), "--m-rule", "sqrt", "--d", "1", "--band", "0.9",
            "--grid", "0.2:0.9:0.05", "--seed", "3", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first, run("b.csv"));
    assert!(first.starts_with("u,r_hat,bias_correction,std_error,lower,upper,level\n"));
    for row in rows(&first) {
        let v: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
        let exact = truth.closed_form_ccef(v[0]).unwrap();
        assert!((v[1] - exact).abs() < 0.05);
        assert!(v[4] <= v[5] && v[6] == 0.9);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["m_used"], 71);
    assert_eq!(manifest["config"]["n"], 5000);
}

#[test]
fn validate_suites() {
    let o = ccef(&["validate", "--suite", "covariance-consistency"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["comparison"].as_array().unwrap().len(), 2);
    assert_eq!(code(&ccef(&["validate", "--suite", "representations"])), 0);
    assert_eq!(code(&ccef(&["validate", "--suite", "bernstein-rate"])), 0);
    assert_eq!(code(&ccef(&["validate", "--suite", "asymptotics"])), 0);
    assert_eq!(code(&ccef(&["validate", "--suite", "speed"])), 2);
}
