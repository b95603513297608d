//! End-to-end runs of the `qtb` binary.

use std::fs;
use std::process::{Command, Output};

fn qtb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtb"))
        .args(args)
        .env_remove("QTB_THREADS")
        .output()
        .expect("spawn qtb")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Header line and data rows as maps from column name to cell.
fn rows(csv: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# qtb "));
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

fn cell(row: &[(String, String)], name: &str) -> f64 {
    row.iter().find(|(k, _)| k == name).unwrap().1.parse().unwrap()
}

#[test]
fn werner_holevo_has_no_benefit() {
    let out = qtb(&["channel-benefit", "--channel", "werner-holevo", "--restarts", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = rows(&stdout(&out));
    assert_eq!(r.len(), 1);
    assert!(cell(&r[0], "W").abs() < 1e-6);
    assert!(cell(&r[0], "W_oracle").abs() < 1e-6);
}

#[test]
fn qubit_basis_measurement_gives_ln2() {
    let out = qtb(&["measure-benefit", "--measurement", "basis2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = rows(&stdout(&out));
    assert!((cell(&r[0], "W") - std::f64::consts::LN_2).abs() < 1e-6);
    assert!(cell(&r[0], "W_channel").abs() < 1e-6);
}

#[test]
fn conditional_total_work_on_a_unit_ladder() {
    let out = qtb(&["conditional-work"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = rows(&stdout(&out));
    assert_eq!(r.len(), 2);
    let ln2 = std::f64::consts::LN_2;
    for (row, e) in r.iter().zip([ln2 - 0.5, ln2 + 0.5]) {
        assert!((cell(row, "p_i") - 0.5).abs() < 1e-12);
        assert!((cell(row, "W_cond_total") - e).abs() < 1e-9);
    }
    let avg: f64 = r.iter().map(|row| cell(row, "p_i") * cell(row, "W_cond_total")).sum();
    assert!((avg - ln2).abs() < 1e-9);
}

#[test]
fn postselect_slope_is_one_half() {
    let out = qtb(&["postselect-scan", "--da", "4,8,16,32"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = rows(&stdout(&out));
    let (a, b) = (&r[0], &r[r.len() - 1]);
    let slope = (cell(b, "W_actual") - cell(a, "W_actual")) / (cell(b, "ln_da") - cell(a, "ln_da"));
    assert!((slope - 0.5).abs() < 1e-2, "slope {slope}");
}

#[test]
fn weight_distance_shrinks_with_width() {
    let out = qtb(&["weight-converge", "--lengths", "10,100,1000"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let d: Vec<f64> = rows(&stdout(&out)).iter().map(|r| cell(r, "trace_distance")).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn protocol_accepts_diagonal_states() {
    let out = qtb(&[
        "protocol-steps", "--energies", "0,1", "--initial", "diag:0.5/0.5", "--final", "basis:0", "--steps", "8",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(rows(&stdout(&out)).len(), 8);
}

#[test]
fn classify_reports_unital_identity() {
    let out = qtb(&["classify", "--channel", "identity(3)"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    let line = csv.lines().nth(2).unwrap();
    assert!(line.starts_with("identity(3),3,1,true,true,"), "{line}");
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let args = ["channel-benefit", "--channel", "random(2,2)", "--seed", "11", "--restarts", "6"];
    let a = qtb(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_qtb"))
        .args(args)
        .env("QTB_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let c = qtb(&[&args[..], &["--output", path.to_str().unwrap()]].concat());
    assert!(c.status.success());
    assert!(c.stdout.is_empty());
    assert_eq!(fs::read(&path).unwrap(), a.stdout);
}

#[test]
fn config_file_is_layered_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"channel": "reset-to-ground", "temp": 2.0}"#).unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_file = rows(&stdout(&qtb(&["channel-benefit", "--config", cfg])));
    assert!((cell(&from_file[0], "T") - 2.0).abs() < 1e-15);
    assert!((cell(&from_file[0], "W") - 2.0 * std::f64::consts::LN_2).abs() < 1e-6);

    let overridden = rows(&stdout(&qtb(&["channel-benefit", "--config", cfg, "--temp", "0.5"])));
    assert!((cell(&overridden[0], "T") - 0.5).abs() < 1e-15);
    assert!((cell(&overridden[0], "W") - 0.5 * std::f64::consts::LN_2).abs() < 1e-6);
}

#[test]
fn config_hash_tracks_effective_settings() {
    let first_line = |args: &[&str]| stdout(&qtb(args)).lines().next().unwrap().to_string();
    let implicit = first_line(&["channel-benefit", "--channel", "identity"]);
    let explicit = first_line(&["channel-benefit", "--channel", "identity", "--temp", "1", "--seed", "0"]);
    let other = first_line(&["channel-benefit", "--channel", "identity", "--temp", "2"]);
    assert!(implicit.starts_with("# qtb channel-benefit config_sha256="));
    assert_eq!(implicit, explicit);
    assert_ne!(implicit, other);
}

#[test]
fn invalid_inputs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"dim_in\": 2,\n \"kraus\": [[[1, 0]").unwrap();
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"channel": "identity", "bogus": 1}"#).unwrap();

    let cases: Vec<Vec<&str>> = vec![
        vec!["channel-benefit", "--channel", "no-such-channel"],
        vec!["channel-benefit", "--channel", bad.to_str().unwrap()],
        vec!["channel-benefit", "--config", unknown.to_str().unwrap()],
        vec!["channel-benefit", "--temp", "-1"],
        vec!["channel-benefit", "--not-a-flag"],
        vec!["postselect-scan", "--success", "7"],
        vec!["weight-compare", "--length", "0"],
    ];
    for args in cases {
        let out = qtb(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(out.stdout.is_empty());
    }

    let out = qtb(&["channel-benefit", "--channel", bad.to_str().unwrap()]);
    assert!(stderr(&out).contains("line 2 column"), "{}", stderr(&out));
}

#[test]
fn io_failures_exit_with_4() {
    let out = qtb(&["channel-benefit", "--channel", "identity", "--output", "/nonexistent-dir/x/out.csv"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    let out = qtb(&["channel-benefit", "--config", "/nonexistent-dir/cfg.json"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_qtb"))
        .args(["classify", "--channel", "identity"])
        .env("QTB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
