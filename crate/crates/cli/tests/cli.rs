use serde_json::Value;
use std::process::{Command, Output};

fn qbaxter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbaxter")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

#[test]
fn eval_s2_reflection_column() {
    let out = qbaxter(&["eval-s2", "--omega", "1,0", "1,0", "--grid", "-2:2:0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["re", "im", "s2_re", "s2_im", "s2_abs", "reflection_residual", "status"]);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 41);
    let mut checked = 0;
    for row in &rows {
        if row[6] == "ok" {
            assert!(row[5].parse::<f64>().unwrap() < 1e-10, "{row:?}");
            checked += 1;
        } else {
            // Integer points are lattice zeros or poles for equal unit periods.
            let re: f64 = row[0].parse().unwrap();
            assert!((re - re.round()).abs() < 1e-9, "{row:?}");
        }
    }
    assert!(checked >= 35);
}

#[test]
fn theorem2_example_passes() {
    let out = qbaxter(&["verify-theorem2", "--n", "2", "--K", "3", "--trials", "20", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["pass"], true);
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["config"]["scenario"]["n"], 2);
    assert_eq!(r["cases"][0]["inputs"]["trials"], 20);
}

#[test]
fn failed_check_exits_one_with_full_report() {
    let out = qbaxter(&["verify-s2", "--tol", "s2_identity=1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert_eq!(r["cases"].as_array().unwrap().len(), 8);
    assert_eq!(r["config"]["tolerances"]["s2_identity"], 1e-300);
}

#[test]
fn config_errors_exit_two_with_field() {
    let out = qbaxter(&["verify-s2", "--tol", "nonsense=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerances.nonsense"));

    let out = qbaxter(&["verify-theorem2", "--n", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario.n"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = 3\n[params]\nomega1 = [1.0, \"x\"]\n").unwrap();
    let out = qbaxter(&["verify-s2", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.omega1"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "seed = 3\npreset = \"quick\"\n[tolerances]\nkernel_identity = 1e-9\n").unwrap();
    let out_path = dir.path().join("report.json");
    let out = qbaxter(&[
        "verify-kernel-identity",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "11",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(r["config"]["seed"], 11);
    assert_eq!(r["config"]["preset"], "quick");
    assert_eq!(r["config"]["tolerances"]["kernel_identity"], 1e-9);
    assert!(r["cases"].as_array().unwrap().iter().all(|c| c["inputs"]["n"] == 1));
}
