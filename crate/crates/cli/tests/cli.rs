//! End-to-end runs of the `cpcox` binary: outputs, exit codes and reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpcox::simulation::{generate_dataset, TruthSpec};
use serde_json::Value;
use tempfile::TempDir;

fn cpcox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpcox")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Simulated data with a change in effect, as `time,event,z1[,weight]` CSV.
/// With `weighted`, every third row is written once with weight 2.
fn change_csv(weighted: bool, duplicated: bool) -> String {
    let truth = TruthSpec::new(vec![2.0, 0.5], vec![0.5], 120);
    let ds = generate_dataset(&truth, 150, 99).unwrap();
    let mut out = String::from(if weighted { "time,event,z1,weight\n" } else { "time,event,z1\n" });
    for (i, sub) in ds.subjects().iter().enumerate() {
        let row = format!("{},{},{}", sub.time, u8::from(sub.event), sub.covariates[0]);
        let twice = i % 3 == 0;
        match (weighted, twice && duplicated) {
            (true, _) => out.push_str(&format!("{row},{}\n", if twice { 2 } else { 1 })),
            (false, true) => out.push_str(&format!("{row}\n{row}\n")),
            (false, false) => out.push_str(&format!("{row}\n")),
        }
    }
    out
}

#[test]
fn fit_reports_aic_with_three_per_changepoint() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "w.csv", &change_csv(true, false));
    let v = stdout_json(&cpcox(&["fit", s(&csv), "--m", "1"]));
    let r = &v["result"]["report"];
    let l = r["log_pl"].as_f64().unwrap();
    assert_eq!(r["k_hat"].as_array().unwrap().len(), 1);
    // 6m + 2p(m+1) with p = 1, m = 1
    assert!((r["criterion"].as_f64().unwrap() - (-2.0 * l + 10.0)).abs() < 1e-9);
    assert_eq!(v["tool"], "cpcox");
    assert_eq!(v["command"], "fit");
    assert_eq!(v["config"]["m"], 1);

    let v0 = stdout_json(&cpcox(&["fit", s(&csv), "--m", "0"]));
    let r0 = &v0["result"]["report"];
    assert!((r0["criterion"].as_f64().unwrap() + 2.0 * r0["log_pl"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(r0["k_hat"].as_array().unwrap().len(), 0);
}

#[test]
fn integer_weights_act_as_duplicated_rows() {
    let dir = TempDir::new().unwrap();
    let w = write(&dir, "w.csv", &change_csv(true, false));
    let d = write(&dir, "d.csv", &change_csv(false, true));
    let fw = stdout_json(&cpcox(&["fit", s(&w), "--m", "1"]));
    let fd = stdout_json(&cpcox(&["fit", s(&d), "--m", "1"]));
    let (lw, ld) = (&fw["result"]["report"], &fd["result"]["report"]);
    assert!((lw["log_pl"].as_f64().unwrap() - ld["log_pl"].as_f64().unwrap()).abs() < 1e-8);
    assert_eq!(lw["k_hat"], ld["k_hat"]);
    assert_eq!(fw["result"]["events"], fd["result"]["events"]);
}

#[test]
fn malformed_event_exits_2_naming_the_row() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "bad.csv", "time,event,z1\n1.0,1,0.5\n2.0,0,1.5\n3.0,2,0.1\n");
    let out = cpcox(&["fit", s(&csv)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("`2`"), "{err}");
}

#[test]
fn select_with_single_model() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "w.csv", &change_csv(true, false));
    let v = stdout_json(&cpcox(&["select", s(&csv), "--max-m", "0", "--criteria", "aic,naive,tic"]));
    for k in ["aic", "aic_naive", "tic"] {
        assert_eq!(v["result"]["reports"][k].as_array().unwrap().len(), 1, "{k}");
        assert_eq!(v["result"]["selected"][k], 0);
    }
}

#[test]
fn select_finds_the_change() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "w.csv", &change_csv(false, false));
    let out = cpcox(&["select", s(&csv), "--max-m", "2", "--min-events", "10", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "m,k_hat,log_pl,aic,aic_selected,aic_naive,aic_naive_selected");
    assert_eq!(rows.len(), 4);
    assert!(text.starts_with("# cpcox "));
    assert!(text.contains("# config: {"));
}

#[test]
fn unregularized_criteria_refuse_a_ridge() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "w.csv", &change_csv(true, false));
    assert_eq!(code(&cpcox(&["select", s(&csv), "--xi", "0.1", "--criteria", "xi,tic"])), 4);
    assert_eq!(code(&cpcox(&["fit", s(&csv), "--xi", "0.1", "--criterion", "aic"])), 4);
    let v = stdout_json(&cpcox(&["select", s(&csv), "--xi", "0.1", "--max-m", "1", "--criteria", "xi"]));
    assert_eq!(v["result"]["reports"]["aic_xi"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_flags_are_rejected() {
    let out = cpcox(&["fit", "x.csv", "--bogus"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_bias_symmetric_spec() {
    let v = stdout_json(&cpcox(&["verify-bias", "--spec", "0.5,0.5,1,1", "--paths", "4000", "--seed", "5"]));
    let r = &v["result"];
    assert_eq!(r["two_c_hat"].as_f64().unwrap(), 3.0);
    assert_eq!(r["checks"][0]["value"].as_f64().unwrap(), 1.5);
    assert!((r["checks"][1]["value"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    assert_eq!(r["agree"], true);
    assert_eq!(v["seed"], 5);
}

#[test]
fn verify_bias_gate_fires_on_the_printed_form() {
    let asym = stdout_json(&cpcox(&["verify-bias", "--spec", "1,0.5,1,1", "--paths", "4000"]));
    assert!((asym["result"]["c_hat"].as_f64().unwrap() - 7.0 / 6.0).abs() < 1e-12);
    // the two forms only differ when σ₁ ≠ σ₂: corrected 73/18, printed 88/18
    let base = ["verify-bias", "--spec", "1,0.5,1,2", "--paths", "4000"];
    let ok = stdout_json(&cpcox(&base));
    assert!((ok["result"]["c_hat"].as_f64().unwrap() - 73.0 / 18.0).abs() < 1e-12);
    let mut printed = base.to_vec();
    printed.extend(["--c-form", "printed"]);
    let out = cpcox(&printed);
    assert_eq!(code(&out), 5);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["agree"], false);
}

#[test]
fn verify_bias_from_matrices() {
    let dir = TempDir::new().unwrap();
    let m = write(
        &dir,
        "m.json",
        r#"{"a_j": [[2, 0.3], [0.3, 1]], "a_j1": [[2, 0.3], [0.3, 1]],
            "b_j": [[2, 0.3], [0.3, 1]], "b_j1": [[2, 0.3], [0.3, 1]], "delta": [0.4, -1.1]}"#,
    );
    let v = stdout_json(&cpcox(&["verify-bias", "--from-matrices", s(&m), "--paths", "4000"]));
    assert!((v["result"]["c_hat"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    let bad = write(&dir, "bad.json", r#"{"a_j": [[1]], "a_j1": [[1]], "b_j": [[1]], "b_j1": [[1]], "delta": [1, 2]}"#);
    assert_eq!(code(&cpcox(&["verify-bias", "--from-matrices", s(&bad)])), 2);
}

const SMALL_BIAS: &str = r#"
experiment = "bias"
seed = 7
replicates = 4

[truth]
hazard_ratios = [1.0, 0.5]
alpha = [0.5]
target_events = 60
"#;

#[test]
fn simulate_is_reproducible_from_its_own_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "b.cfg", SMALL_BIAS);
    let (p1, p2) = (dir.path().join("one"), dir.path().join("two"));
    assert_eq!(code(&cpcox(&["simulate", s(&cfg), "--output-prefix", s(&p1)])), 0);
    assert_eq!(code(&cpcox(&["simulate", s(&cfg), "--output-prefix", s(&p2)])), 0);
    for ext in ["json", "csv"] {
        let a = fs::read(p1.with_extension(ext)).unwrap();
        assert_eq!(a, fs::read(p2.with_extension(ext)).unwrap(), "{ext}");
    }
    // rerun from the resolved config embedded in the artifact
    let first: Value = serde_json::from_slice(&fs::read(p1.with_extension("json")).unwrap()).unwrap();
    let embedded = toml::to_string(&first["config"]).unwrap();
    let cfg2 = write(&dir, "embedded.cfg", &embedded);
    let p3 = dir.path().join("three");
    assert_eq!(code(&cpcox(&["simulate", s(&cfg2), "--output-prefix", s(&p3)])), 0);
    assert_eq!(fs::read(p1.with_extension("json")).unwrap(), fs::read(p3.with_extension("json")).unwrap());

    let csv = fs::read_to_string(p1.with_extension("csv")).unwrap();
    assert!(csv.contains("# seed: 7"));
    assert!(csv.contains("bias_mean,bias_se,aic_prediction,naive_prediction"));
}

#[test]
fn simulate_rejects_schema_violations() {
    let dir = TempDir::new().unwrap();
    let unknown = write(&dir, "u.cfg", &format!("{SMALL_BIAS}\nbogus = 1\n"));
    assert_eq!(code(&cpcox(&["simulate", s(&unknown)])), 2);
    let bad_alpha = write(&dir, "a.cfg", &SMALL_BIAS.replace("alpha = [0.5]", "alpha = [1.5]"));
    assert_eq!(code(&cpcox(&["simulate", s(&bad_alpha)])), 2);
    assert_eq!(code(&cpcox(&["simulate", s(&dir.path().join("missing.cfg"))])), 2);
}

fn km_rows(out: &Output) -> Vec<(i64, f64, f64)> {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("group"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn km_curves() {
    let dir = TempDir::new().unwrap();
    let two = write(
        &dir,
        "g.csv",
        "time,event,arm\n1,1,0\n2,0,0\n3,1,0\n4,1,0\n1.5,1,1\n2.5,1,1\n3.5,0,1\n",
    );
    let rows = km_rows(&cpcox(&["km", s(&two), "--group-col", "arm"]));
    for g in [0, 1] {
        let curve: Vec<f64> = rows.iter().filter(|r| r.0 == g).map(|r| r.2).collect();
        assert_eq!(curve[0], 1.0);
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
    }
    assert_eq!(rows.iter().rfind(|r| r.0 == 0).unwrap().2, 0.0);

    let one = write(&dir, "one.csv", "time,event\n2.5,1\n");
    assert_eq!(km_rows(&cpcox(&["km", s(&one)])), vec![(0, 0.0, 1.0), (0, 2.5, 0.0)]);

    let weighted = write(&dir, "w.csv", "time,event,weight\n1,1,2\n2,0,1\n3,1,3\n");
    let duplicated = write(&dir, "d.csv", "time,event\n1,1\n1,1\n2,0\n3,1\n3,1\n3,1\n");
    assert_eq!(km_rows(&cpcox(&["km", s(&weighted)])), km_rows(&cpcox(&["km", s(&duplicated)])));

    assert_eq!(code(&cpcox(&["km", s(&two), "--group-col", "missing"])), 2);
}
