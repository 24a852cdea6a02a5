//! End-to-end runs of the `eic` binary.

use std::process::{Command, Output};

fn eic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eic")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn region_lists_corners() {
    let o = eic(&["region", "--view", "V8", "--p", "0.5", "--emit", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("kind,a1,a2,c,r1,r2,m\n"));
    for row in ["corner,,,,0.375,0.5,", "corner,,,,0.45,0.45,", "corner,,,,0.5,0.375,", "halfspace,1.0,1.5,1.125,,,"] {
        assert!(text.lines().any(|l| l == row), "missing {row}");
    }
}

#[test]
fn open_view_lists_both_bounds() {
    let text = stdout(&eic(&["region", "--view", "V7", "--p", "0.5"]));
    assert!(text.contains("halfspace:inner"));
    assert!(text.contains("corner:outer,,,,0.45,0.45,"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = eic(&["simulate", "--m", "1000", "--trials", "3", "--seed", "9", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().starts_with("symmetric-v2,V2,0.5,1000,1000,"));
}

#[test]
fn sweep_writes_summary_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let overlay = dir.path().join("overlay.csv");
    let o = eic(&[
        "sweep",
        "--scheme",
        "baseline-no-csit",
        "--m",
        "500,1000",
        "--trials",
        "2",
        "--overlay",
        overlay.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
    // 4 half-spaces + 6 corners + 2 points.
    assert_eq!(std::fs::read_to_string(&overlay).unwrap().lines().count(), 13);
}

#[test]
fn config_errors_exit_with_two() {
    assert_eq!(eic(&["simulate", "--view", "V1", "--m", "1000"]).status.code(), Some(2));
    assert_eq!(eic(&["sweep", "--m", "50"]).status.code(), Some(2));
    assert_eq!(eic(&["region", "--p", "1.5"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_three() {
    // At m = 100 the slack is too thin and most symmetric trials fail to decode.
    let o = eic(&["simulate", "--m", "100", "--trials", "4", "--check"]);
    assert!(stdout(&o).contains(",decode-failure,"));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn marginal_check_passes() {
    let o = eic(&["verify-marginals", "--p", "0.3", "--samples", "100000", "--check"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
}
