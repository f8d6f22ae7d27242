use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn condwalk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condwalk"))
        .args(args)
        .current_dir(dir)
        .env_remove("CONDWALK_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn srw_env(dir: &Path) {
    let o = condwalk(dir, &["env", "gen", "--kind", "srw", "--window", "-64", "4160", "-o", "env.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    srw_env(dir.path());
    let o = condwalk(dir.path(), &["env", "validate", "env.json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["pass"], true);
}

#[test]
fn survival_of_two_steps() {
    let dir = tempfile::tempdir().unwrap();
    srw_env(dir.path());
    let o = condwalk(dir.path(), &["walk", "survival", "--env", "env.json", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.25");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    srw_env(dir.path());
    std::fs::write(dir.path().join("cfg.json"), r#"{"n": 3, "env": "env.json"}"#).unwrap();
    let from_config = condwalk(dir.path(), &["--config", "cfg.json", "walk", "survival"]);
    assert_eq!(stdout(&from_config).trim(), "0.25");
    let overridden = condwalk(dir.path(), &["--config", "cfg.json", "walk", "survival", "--n", "4"]);
    assert_eq!(stdout(&overridden).trim(), "0.1875");
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(condwalk(dir.path(), &["walk", "survival"]).status.code(), Some(2));
    assert_eq!(condwalk(dir.path(), &["nonsense"]).status.code(), Some(2));
    let o = condwalk(dir.path(), &["walk", "survival", "--env", "missing.json", "--n", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exact_network_solves() {
    let dir = tempfile::tempdir().unwrap();
    srw_env(dir.path());
    let o = condwalk(dir.path(), &["net", "hitprob", "--env", "env.json", "--level", "5"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.1).abs() < 1e-14);
    let o = condwalk(dir.path(), &["net", "little-bound", "--env", "env.json", "--level", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["little_bound"].as_f64().unwrap() - 10.0 / 3.0).abs() < 1e-14);
    let o = condwalk(dir.path(), &["net", "reversibility", "--env", "env.json", "--level", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let o = condwalk(dir.path(), &["net", "reduce", "--env", "env.json", "--level", "4", "--kind", "omega1"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "omega1");
}

#[test]
fn sampling_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    srw_env(dir.path());
    let args = ["--seed", "5", "walk", "sample-meander", "--env", "env.json", "--n", "50", "--m", "20"];
    let a = stdout(&condwalk(dir.path(), &args));
    let b = stdout(&condwalk(dir.path(), &args));
    assert_eq!(a, b);
    assert!(a.starts_with("# {"));
    // 20 samples of 51 positions plus two header lines
    assert_eq!(a.lines().count(), 20 * 51 + 2);
    for line in a.lines().skip(2) {
        let f: Vec<i64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(f[1] == 0 || f[2] > 0, "conditioned path left the half-line: {line}");
    }
    let q = stdout(&condwalk(dir.path(), &["continuum", "qdensity", "--t", "1", "--points", "3", "--y-max", "2"]));
    assert_eq!(q.lines().next(), Some("y,q"));
}

fn strip_meta(text: &str) -> Value {
    let mut v: Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("meta");
    v
}

#[test]
fn verify_all_orchestration() {
    let dir = tempfile::tempdir().unwrap();
    let o = condwalk(
        dir.path(),
        &["--seed", "3", "env", "gen", "--kind", "iid", "--r-max", "3", "--window", "-1000", "1500", "-o", "env.json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let config = r#"{
        "suite": {
            "n": 256, "m": 400, "crossing_levels": [8, 16], "overshoot_levels": [8, 16], "overshoot_m": 400,
            "corollary_n": 16, "corollary_m": 300, "rho_dt": 1e-4, "tightness_n": [256],
            "particle_level": 3, "max_particles": 2, "queue_horizon": 20000, "continuum_m": 300
        },
        "thresholds": {
            "ks_rayleigh_srw": 0.2, "ks_rayleigh_random": 0.2, "ks_marginal": 0.2, "ratio_srw": 0.2,
            "ratio_random": 0.3, "ks_corollary": 0.3, "ks_continuum": 0.2, "tail_x3_abs": 0.05,
            "small_h_floor": 0.8, "little_relative": 0.2
        }
    }"#;
    std::fs::write(dir.path().join("cfg.json"), config).unwrap();
    let args = ["--config", "cfg.json", "--seed", "7", "--jobs", "2", "verify", "all", "--env", "env.json", "--out", "report.json"];
    let o = condwalk(dir.path(), &args);
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: Value = serde_json::from_str(&text).unwrap();
    let pass = report["pass"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if pass { 0 } else { 1 }));
    let names: Vec<&str> = report["statistics"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    for suite in
        ["calibration.rayleigh", "rayleigh", "marginal_t0.5", "ratio", "crossing_lemmas", "overshoot", "corollary", "tightness", "particles", "continuum"]
    {
        assert!(names.iter().any(|n| n.starts_with(&format!("{suite}."))), "missing {suite}");
    }
    assert!(report["meta"]["runtime_secs"].is_number());

    std::fs::rename(dir.path().join("report.json"), dir.path().join("first.json")).unwrap();
    condwalk(dir.path(), &args);
    let again = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(strip_meta(&text), strip_meta(&again));
}

#[test]
fn plot_data_written() {
    let dir = tempfile::tempdir().unwrap();
    srw_env(dir.path());
    let o = condwalk(
        dir.path(),
        &["verify", "rayleigh", "--env", "env.json", "--n", "128", "--m", "300", "--plots", "plots", "--out", "r.json"],
    );
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let csv = std::fs::read_to_string(dir.path().join("plots/rayleigh.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,empirical,target"));
    // the printed statistics also appear in the JSON
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(stdout(&o).contains("ks"));
    assert!(rep["statistics"].as_array().unwrap().iter().any(|s| s["name"] == "ks"));
}
