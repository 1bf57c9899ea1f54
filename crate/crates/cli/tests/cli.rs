use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bethe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bethe")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "sweep.json",
        r#"{"experiment": "fixed-point-sweep", "j": {"start": -1.5, "stop": 1.5, "steps": 7}, "theta": [0, 0.1], "restarts": 100}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = bethe(&["experiment", "--config", &config, "--output", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = fs::read(&a).unwrap();
    assert_eq!(first, fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with("j,theta,seed,count,fixed_point,"));
}

#[test]
fn output_path_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trees.csv");
    let text = format!(
        r#"{{"experiment": "tree-exactness", "seeds": [1, 2, 3], "output": {}}}"#,
        serde_json::to_string(out.to_str().unwrap()).unwrap()
    );
    let config = write(dir.path(), "trees.json", &text);
    assert!(bethe(&["experiment", "--config", &config]).status.success());
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 4);
}


#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "missing.json", r#"{"seeds": [0]}"#);
    let o = bethe(&["experiment", "--config", &missing]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment"));

    let empty = write(dir.path(), "empty.json", r#"{"experiment": "fixed-point-sweep", "j": []}"#);
    let o = bethe(&["experiment", "--config", &empty]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at j"));

    assert_eq!(bethe(&["bp-run", "--graph", "hex:3"]).status.code(), Some(2));
}

#[test]
fn invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "m.json", r#"{"nodes": 2, "edges": [[0, 1]], "J": [1.0, 2.0], "theta": [0, 0]}"#);
    assert_eq!(bethe(&["bp-run", "--model", &bad]).status.code(), Some(2));
    let o = bethe(&["gibbs", "--sweeps", "10", "--burn-in", "20"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bp_run_prints_marginals() {
    let o = bethe(&["bp-run", "--graph", "grid:2x2", "--j", "0", "--theta", "0.5"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "node,p_plus,mean");
    assert_eq!(lines.len(), 5);
    let p: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((p - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
}

#[test]
fn model_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "tri.json",
        r#"{"nodes": 3, "edges": [[0, 1], [1, 2], [0, 2]], "J": [0.5, 0.5, 0.5], "theta": [0.1, 0.0, -0.1]}"#,
    );
    let o = bethe(&["enumerate", "--model", &m, "--restarts", "50"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
}

#[test]
fn decode_and_stability_subcommands() {
    let o = bethe(&["decode", "--flip", "6", "--decoder", "bp", "--epsilon", "0.05,0.2"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",false")), "{text}");

    let o = bethe(&["stability", "--graph", "complete:4", "--j", "-1.5", "--theta", "0.5", "--damping", "0.9"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("StableWithDamping"), "{text}");
}
