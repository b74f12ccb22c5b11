use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn antnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_antnet")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_then_verify_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"lengths": [1, 1, 1], "alpha": 0.3, "n_steps": 20000, "seeds": [1], "output_dir": "run"}"#)
        .unwrap();
    let cfg = cfg.to_str().unwrap();

    let out = antnet(&["simulate", "-c", cfg, "--seed", "4", "--seed", "9"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["seed_4.jsonl", "seed_9.jsonl", "final_seed_4.json", "final_seed_9.json", "summary.csv"] {
        assert!(dir.path().join("run").join(name).exists(), "{name}");
    }
    assert!(!dir.path().join("run/seed_1.jsonl").exists());

    let out = antnet(&["verify", "-c", cfg, "--seed", "4", "--seed", "9", "--tolerance", "0.2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["theory"]["case"], "II");

    // Seed 1 was never simulated.
    let out = antnet(&["verify", "-c", cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing artifact"));

    let out = antnet(&["overlay", "-c", cfg, "--seed", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("run/overlay.csv")).unwrap();
    assert!(csv.starts_with("seed,n,t,emp_w1,emp_w3,flow_w1,flow_w3,dist"));
}

#[test]
fn theory_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        antnet(&["theory", "--alpha", "0.3", "--lengths", "2,4,3", "--out-dir", "th", "--grid", "10"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let limits: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(limits["case"], "II");
    let b1 = limits["beta"][0].as_f64().unwrap();
    assert!((b1 - 3.0 / 5.8).abs() < 1e-12);
    let phase = fs::read_to_string(dir.path().join("th/phase.csv")).unwrap();
    assert_eq!(phase.lines().count(), 101);
    let zeros = fs::read_to_string(dir.path().join("th/zeros.csv")).unwrap();
    assert!(zeros.lines().any(|l| l.starts_with("Interior,")));
    assert!(dir.path().join("th/flows.csv").exists());
}

#[test]
fn flow_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = antnet(&["flow", "--alpha", "0.3", "--lengths", "2,6,3", "--start", "0.4,0.2"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("t,w1,w3"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - 1.0).abs() < 1e-6 && (last[2] - 0.7).abs() < 1e-6);
    assert!(String::from_utf8_lossy(&out.stderr).contains("converged"));
}

#[test]
fn oracle_prints_exact_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let out = antnet(&["oracle", "--expr", "par(e,e)", "--weights", "2,1"], dir.path());
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rows, serde_json::json!([{"path": [0], "prob": "2/3"}, {"path": [1], "prob": "1/3"}]));

    let graph = r#"{"vertices":[0,1,2],"edges":[{"id":0,"u":0,"v":1},{"id":1,"u":1,"v":2},{"id":2,"u":0,"v":2}],"source":0,"sink":2}"#;
    fs::write(dir.path().join("g.json"), graph).unwrap();
    let out = antnet(&["oracle", "--graph", "g.json", "--mode", "excursion"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rows, serde_json::json!([{"path": [0, 1], "prob": "1/3"}, {"path": [2], "prob": "2/3"}]));

    let out = antnet(&["oracle", "--expr", "par(e,e)", "--weights", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn urn_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        antnet(&["urn", "--intercept", "0.25", "--slope", "0.5", "--steps", "1000", "--every", "100"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,Xhat");
    assert_eq!(lines.len(), 12);
    assert!(lines.last().unwrap().starts_with("1000,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stable fixed points [0.5"));
}
