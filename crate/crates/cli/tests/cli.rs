use std::path::Path;
use std::process::{Command, Output};

fn dynamap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynamap")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dynamap(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_nonzero() {
    assert!(!dynamap(&[]).status.success());
    assert!(!dynamap(&["run"]).status.success());
    assert!(!dynamap(&["bogus"]).status.success());
    let out = dynamap(&["eval", "--gt", "/nonexistent/gt.txt", "--est", "/nonexistent/est.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["synth", "--out", s(out), "--frames", "3", "--seed", "11"]);
    }
    for rel in ["groundtruth.txt", "rgb.txt", "depth.txt", "intrinsics.txt"] {
        assert_eq!(
            std::fs::read(a.join(rel)).unwrap(),
            std::fs::read(b.join(rel)).unwrap(),
            "{rel}"
        );
    }
    let list = std::fs::read_to_string(a.join("rgb.txt")).unwrap();
    let first = list.lines().find(|l| !l.starts_with('#')).unwrap();
    let img = first.split_whitespace().nth(1).unwrap();
    assert_eq!(std::fs::read(a.join(img)).unwrap(), std::fs::read(b.join(img)).unwrap());
}

#[test]
fn eval_of_ground_truth_against_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--out", s(dir.path()), "--frames", "40", "--static"]);
    let gt = dir.path().join("groundtruth.txt");
    let out_dir = dir.path().join("eval");
    let text = ok(&["eval", "--gt", s(&gt), "--est", s(&gt), "--out", s(&out_dir)]);
    assert!(text.contains("Absolute trajectory error"));
    let row = text.lines().find(|l| l.starts_with("groundtruth")).unwrap();
    let values: Vec<f64> = row.split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    assert!(values.iter().all(|v| v.abs() < 1e-9), "{row}");
    for csv in [
        "ate.csv",
        "rpe_translational.csv",
        "rpe_rotational.csv",
        "groundtruth.ate.txt",
    ] {
        assert!(out_dir.join(csv).is_file(), "{csv}");
    }
}

#[test]
fn reproduce_tables_reports_the_anchor_cells() {
    let text = ok(&["reproduce-tables"]);
    assert!(text.contains("96.71"));
    assert!(text.contains("0 outside tolerance"));
}

#[test]
fn run_then_export_and_project_the_map() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("out");
    ok(&["synth", "--out", s(&data), "--frames", "12"]);
    let text = ok(&["run", "--dataset", s(&data), "--out", s(&out), "--seed", "3"]);
    assert!(text.starts_with("12 frames, 0 lost"), "{text}");
    for f in ["trajectory.txt", "report.txt", "frames.csv", "map.txt", "map.ply"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let est = out.join("trajectory.txt");
    ok(&[
        "eval",
        "--gt",
        s(&data.join("groundtruth.txt")),
        "--est",
        s(&est),
        "--baseline",
        s(&est),
        "--delta",
        "0.1",
    ]);

    let ply = dir.path().join("copy.ply");
    ok(&[
        "map-export",
        "--map",
        s(&out.join("map.txt")),
        "--format",
        "ply",
        "--out",
        s(&ply),
    ]);
    assert_eq!(
        std::fs::read(&ply).unwrap(),
        std::fs::read(out.join("map.ply")).unwrap()
    );

    let pgm = dir.path().join("grid.pgm");
    let text = ok(&[
        "costmap",
        "--map",
        s(&out.join("map.txt")),
        "--z-min",
        "-2",
        "--z-max",
        "2",
        "--out",
        s(&pgm),
    ]);
    assert!(text.contains("occupied cells"));
    assert!(std::fs::read_to_string(&pgm).unwrap().starts_with("P2"));
}

#[test]
fn run_without_masks_is_plain_odometry() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--out", s(&data), "--frames", "8"]);
    std::fs::remove_dir_all(data.join("masks")).unwrap();
    let out = dir.path().join("out");
    let text = ok(&["run", "--dataset", s(&data), "--out", s(&out)]);
    assert!(text.starts_with("8 frames, 0 lost"), "{text}");
    let baseline = dir.path().join("baseline");
    ok(&[
        "run",
        "--dataset",
        s(&data),
        "--out",
        s(&baseline),
        "--no-dynamic-filter",
    ]);
    assert_eq!(
        std::fs::read(out.join("trajectory.txt")).unwrap(),
        std::fs::read(baseline.join("trajectory.txt")).unwrap()
    );
}
