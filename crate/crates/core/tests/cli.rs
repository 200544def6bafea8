use std::path::Path;
use std::process::{Command, Output};

use phasenoise_core::harness::{parse_csv, ScenarioConfig};

fn phasenoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasenoise"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("UTF-8 output")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
detectors = ["EUC", "GAP"]
frame_length = 1000
min_symbols = 10000
target_errors = 10
max_symbols = 20000
"#;

#[test]
fn run_writes_csv_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_path = dir.path().join("curve.csv");
    let out = phasenoise(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "5",
        "--detectors",
        "GAP,TSD",
        "--ebn0",
        "14:2:16",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = parse_csv(std::fs::File::open(&out_path).unwrap()).unwrap();
    assert_eq!(curve.metadata.seed, 5);
    assert_eq!(curve.metadata.scenario, "gaussian_iid");
    let labels: Vec<String> = curve.rows.iter().map(|r| format!("{}@{}", r.detector, r.eb_n0_db)).collect();
    assert_eq!(labels, ["GAP@14", "GAP@16", "TSD@14", "TSD@16"]);
}

#[test]
fn run_to_stdout_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let args = ["run", "--config", &cfg, "--ebn0", "18", "--scenario", "wiener_ekf"];
    let a = phasenoise(&args);
    let b = phasenoise(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let curve = parse_csv(a.stdout.as_slice()).unwrap();
    assert_eq!(curve.metadata.scenario, "wiener_ekf");
    assert_eq!(curve.rows.len(), 2);
}

#[test]
fn bound_and_floor_agree_at_high_snr() {
    let out = phasenoise(&["bound", "--order", "16", "--sigma-p2", "0.01", "--ebn0", "10:10:30"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eb_n0_db,n0,union_bound,error_floor");
    assert_eq!(lines.len(), 4);
    let bounds: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(bounds.windows(2).all(|w| w[1] < w[0]));

    let floor = phasenoise(&["floor", "--order", "16", "--sigma-p2", "0.01"]);
    assert!(floor.status.success());
    let value: f64 = stdout(&floor).trim().parse().unwrap();
    let in_bound: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert_eq!(value, in_bound);

    let spiral = phasenoise(&["floor", "--constellation", "spiral", "--order", "16"]);
    assert_eq!(stdout(&spiral).trim(), "0.0");
}

#[test]
fn oracle_compare_reports_rates() {
    let out = phasenoise(&["oracle-compare", "--detectors", "GAP,EUC", "--ebn0", "20", "--samples", "500"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "GAP");
    assert_eq!(rows[0][3], "500");
    let gap_rate: f64 = rows[0][4].parse().unwrap();
    let euc_rate: f64 = rows[1][4].parse().unwrap();
    assert!(gap_rate > 0.99 && gap_rate >= euc_rate);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "order = 17\nmin_symbols = 5\n");
    for args in [
        vec!["run", "--config", bad.as_str()],
        vec!["run", "--detectors", "NOPE"],
        vec!["run", "--ebn0", "10:-1:5"],
        vec!["run", "--config", "/nonexistent/cfg.toml"],
        vec!["floor", "--sigma-p2", "0"],
        vec!["oracle-compare", "--config", bad.as_str()],
    ] {
        let out = phasenoise(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{args:?}");
    }
    let out = phasenoise(&["run", "--config", &bad]);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("order 17") && msg.contains("min_symbols"), "{msg}");
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.resolved().validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 4);
}
