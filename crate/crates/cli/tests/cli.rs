use std::path::Path;
use std::process::{Command, Output};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayes-arbiter"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &serde_json::Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn bf_normal_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&bin(dir.path(), &["bf", "normal", "--n", "1", "--xbar", "0"]));
    assert!((f(&v["log_bf10"]) + 0.34657).abs() < 1e-5);
    let v = json(&bin(dir.path(), &["bf", "normal", "--n", "9", "--xbar", "-0.2"]));
    assert!(f(&v["log_bf10"]) < 0.0);
}

#[test]
fn bf_poisgeo_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&bin(dir.path(), &["bf", "poisgeo", "--data", "2,3"]));
    assert!((f(&v["shared_improper"]["log_bf12"]) - 0.6286086594).abs() < 1e-9);
    assert!((f(&v["printed_formula"]["log_bf12"]) - 14.76348599).abs() < 1e-7);
    assert_eq!(v["printed_formula"]["method"], "printed_formula");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = bin(d, &["bf", "poisgeo", "--data", "0,0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("improper marginal"));
    assert_eq!(bin(d, &["mixture", "--data", "0,0,0", "--seed", "1"]).status.code(), Some(3));
    assert_eq!(bin(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(d, &["bf", "poisgeo", "--data", "1,x"]).status.code(), Some(2));
    assert_eq!(bin(d, &["bf", "poisgeo"]).status.code(), Some(2));
    assert_eq!(bin(d, &["experiment", "fig1"]).status.code(), Some(2), "seed is mandatory");
    assert_eq!(bin(d, &["lindley", "--t", "-1", "--n", "10"]).status.code(), Some(2));
    assert_eq!(bin(d, &["mixture", "--data", "1,2", "--seed", "1", "--iters", "10", "--burn-in", "20"]).status.code(), Some(2));
    assert_eq!(bin(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn threads_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bayes-arbiter"))
        .args(["lindley", "--t", "1", "--n", "10"])
        .env("BAYES_ARBITER_THREADS", "many")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lindley_accepts_scientific_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&bin(dir.path(), &["lindley", "--t", "1.96", "--n", "1e6"]));
    assert!((f(&v["log_bf01"]) - 4.9869).abs() < 1e-3);
    let v = json(&bin(dir.path(), &["lindley", "--t", "0", "--n", "10,100"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!((f(&v["rows"][1]["log_bf01"]) - 0.5 * 101f64.ln()).abs() < 1e-9);
}

#[test]
fn mixture_is_deterministic_and_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "count\n3\n5\n4\n2\n6\n").unwrap();
    let args = ["mixture", "--data-file", "x.csv", "--a0", "0.5", "--iters", "10000", "--seed", "7"];
    let a = bin(dir.path(), &args);
    let b = bin(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["n"], 5);
    assert_eq!(v["draws"], 8000);
    let alpha = f(&v["alpha"]["mean"]);
    assert!((0.0..=1.0).contains(&alpha));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.cfg"), "# lindley defaults\nt = 1.96\nn = 100\nseed = 9  # unused here\n").unwrap();
    let v = json(&bin(d, &["lindley", "--config", "run.cfg"]));
    assert_eq!(v["n"], 100);
    let v = json(&bin(d, &["--config", "run.cfg", "lindley", "--n", "1e6"]));
    assert_eq!(v["n"], 1_000_000);
    assert_eq!(f(&v["t"]), 1.96);

    std::fs::write(d.join("bad.cfg"), "sede = 9\n").unwrap();
    assert_eq!(bin(d, &["lindley", "--config", "bad.cfg", "--t", "1", "--n", "5"]).status.code(), Some(2));
}

#[test]
fn experiment_fig2_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let v = json(&bin(
        d,
        &["experiment", "fig2", "--seed", "1", "--replicas", "20", "--a0", "0.5", "--iters", "1000", "--burn-in", "200", "--out", "o"],
    ));
    assert_eq!(v["command"], "experiment fig2");
    let csv = std::fs::read_to_string(d.join("o/fig2.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "a0,n,replica,post_mean_alpha,post_median_alpha");
    assert_eq!(lines.len(), 1 + 20 * 10);
    assert!(d.join("o/fig2_a0_0.5.svg").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["replicas"], 20);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    for a in manifest["artifacts"].as_array().unwrap() {
        let bytes = std::fs::read(d.join("o").join(a["name"].as_str().unwrap())).unwrap();
        assert_eq!(a["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(a["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn failed_experiment_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // A directory squatting on the last artifact's name makes its rename fail.
    std::fs::create_dir_all(out.join("fig1_H1.svg")).unwrap();
    let res = bin(dir.path(), &["experiment", "fig1", "--seed", "1", "--out", "o"]);
    assert_eq!(res.status.code(), Some(1));
    let left: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(left, vec!["fig1_H1.svg".to_string()]);
}

#[test]
fn calibrate_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let v = json(&bin(d, &["calibrate", "normal", "--n", "25", "--xbar", "0.3", "--mode", "prior", "--seed", "3"]));
    let (p0, se0) = (f(&v["p0"]), f(&v["mc_se0"]));
    assert!((0.0..=1.0).contains(&p0));
    assert!((se0 - (p0 * (1.0 - p0) / 10_000.0).sqrt()).abs() < 1e-9);

    let out = bin(d, &["calibrate", "poisgeo", "--data", "3,5,4", "--mode", "prior", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(3), "prior predictive under 1/λ is undefined");

    let v = json(&bin(d, &["calibrate", "poisgeo", "--data", "3,5,4", "--n-rep", "500", "--weights", "0.5,0.5", "--seed", "3"]));
    assert_eq!(v["improper_prior"], true);
    assert_eq!(v["encompassing_weights"].as_array().unwrap().len(), 2);

    let v = json(&bin(d, &["calibrate", "pvalue", "--data", "100,100,100", "--seed", "3", "--n-rep", "2000"]));
    assert!((0.0..=1.0).contains(&f(&v["p"])));

    assert_eq!(bin(d, &["calibrate", "bootstrap", "--replicas", "5", "--seed", "3"]).status.code(), Some(2));
}
