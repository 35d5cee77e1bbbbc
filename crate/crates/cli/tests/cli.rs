use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_final-iterate"));
    cmd.env_remove("FINAL_ITERATE_JOBS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn sweep_over_dimensions_passes_and_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let out = run(&["sweep", "--family", "sc", "--d", "1,2,4,...,64", "--T", "4096", "--curve", curve.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("family,d,T,final_value,bound,ratio,pass"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r[0] == "sc" && r[2] == "4096" && r[6] == "true"));

    let curve = std::fs::read_to_string(&curve).unwrap();
    let values: Vec<f64> = curve.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 7);
    assert!(values.windows(2).skip(1).all(|w| w[1] >= w[0]), "{values:?}");
}

#[test]
fn verify_reports_small_deviation() {
    let out = run(&["verify", "--family", "lip-fixed", "--d", "8", "--T", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-9);
    for key in ["family", "d", "T", "max_deviation", "final_value", "bound", "pass"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["family"], "lip-fixed");
}

#[test]
fn walk_meets_stationary_bound() {
    let out = run(&["walk", "--n", "100", "--profile", "quadratic"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let sub = v["suboptimality"].as_f64().unwrap();
    assert!(sub <= (2.0 + 24.0 * std::f64::consts::E) / 100.0);
    assert_eq!(v["n"], 100);

    let csv = run(&["walk", "--n", "10", "--profile", "linear:0.5", "--format", "csv", "--method", "linear_solve"]);
    assert_eq!(stdout(&csv).lines().count(), 12);
}

#[test]
fn certify_and_lowerbound() {
    let out = run(&["certify", "--family", "sc", "--d", "4", "--T", "32", "--samples", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["lipschitz"]["pass"], true);
    assert_eq!(v["strong_convexity"]["pass"], true);

    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("h.csv");
    let out = run(&["lowerbound", "--family", "lip-dec", "--d", "3", "--T", "9", "--dump", dump.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let trace = stdout(&out);
    assert_eq!(trace.lines().next(), Some("t,x_1,x_2,x_3,g_1,g_2,g_3,f_value"));
    assert_eq!(trace.lines().count(), 11);
    assert!(std::fs::read_to_string(dump).unwrap().starts_with("# family=lip-dec\n# d=3\n# T=9\n"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec!["mc", "--T", "100", "--trials", "300", "--eps", "0.5", "--seed", "7", "--out", p.to_str().unwrap()]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    assert!(bin().args(args(&a)).env("FINAL_ITERATE_JOBS", "1").status().unwrap().success());
    assert!(bin().args(args(&b)).arg("--jobs").arg("4").status().unwrap().success());
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    // rerun overwrites with the same bytes
    assert!(bin().args(args(&a)).status().unwrap().success());
    assert_eq!(first, std::fs::read(&a).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 301);
}

#[test]
fn failed_check_exits_one_and_names_the_point() {
    let out = run(&["verify", "--family", "sc", "--d", "2", "--T", "16", "--tol=-1"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["status"], "fail");
    assert_eq!(report["failures"][0]["family"], "sc");
    assert_eq!(report["failures"][0]["d"], 2);
    assert_eq!(report["failures"][0]["T"], 16);

    let out = run(&["mc", "--T", "100", "--trials", "200", "--eps", "0.5", "--bound-constant", "0", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["failures"][0]["instance"], "abs");
    assert_eq!(report["failures"][0]["T"], 100);
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(run(&["verify", "--family", "sc", "--d", "2"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--bogus", "1"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--family", "sc", "--d", "8", "--T", "4"]).status.code(), Some(2));
    assert_eq!(run(&["walk", "--n", "10", "--profile", "linear:-1"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    let bad_env = bin().args(["walk", "--n", "4"]).env("FINAL_ITERATE_JOBS", "many").output().unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
    let out = run(&["walk", "--n", "4", "--out", "/nonexistent-dir/x.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "# grid\nfamily = lip-dec,lip-fixed\nd = 2,4\nT = 64\nformat = json\n").unwrap();
    let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--T", "128"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["T"] == 128 && r["pass"] == true));
    assert_eq!(rows[0]["family"], "lip-dec");
}
