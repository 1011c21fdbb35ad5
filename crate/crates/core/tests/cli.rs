mod common;

use std::path::Path;
use std::process::{Command, Output};

fn crts(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_crts")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "crts {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn synth_extract_eval_render_round() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = d.join("synth");
    crts(&[
        "synth",
        "--out",
        synth.to_str().unwrap(),
        "--lane-change-slots",
        "5",
        "--roundabout-vehicles",
        "6",
    ]);
    for f in [
        "suite.crts",
        "synth-highway.crtd",
        "synth-highway.crtm",
        "synth-roundabout.crtd",
        "synth-roundabout.crtm",
    ] {
        assert!(synth.join(f).exists(), "{f}");
    }

    let suite = d.join("out/mined.crts");
    let out = crts(&[
        "extract",
        "--data",
        synth.join("synth-highway.crtd").to_str().unwrap(),
        synth.join("synth-roundabout.crtd").to_str().unwrap(),
        "--map",
        synth.join("synth-highway.crtm").to_str().unwrap(),
        synth.join("synth-roundabout.crtm").to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        suite.to_str().unwrap(),
        "--stats",
    ]);
    let text = stdout(&out);
    assert!(text.contains("total\t11"), "{text}");
    assert!(text.contains("train\t9"), "{text}");

    let report = d.join("report.json");
    let out = crts(&[
        "eval",
        "--suite",
        suite.to_str().unwrap(),
        "--split",
        "all",
        "--workers",
        "2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("11/11 success"), "{}", stdout(&out));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["n_scenarios"], 11);
    assert_eq!(json["success_rate"], 1.0);

    let text = std::fs::read_to_string(&suite).unwrap();
    let id = text
        .lines()
        .find(|l| l.starts_with("scenario "))
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap()
        .to_string();
    let img = d.join("img");
    let out = crts(&[
        "render",
        "--suite",
        suite.to_str().unwrap(),
        "--scenario",
        &id,
        "--step",
        "5",
        "--out",
        img.to_str().unwrap(),
    ]);
    let listing = stdout(&out);
    let files: Vec<&str> = listing.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    assert_eq!(files.len(), 6, "{files:?}");
    assert!(files.iter().all(|f| Path::new(f).exists()));
}

#[test]
fn validate_prints_a_row_per_track() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    crts(&[
        "synth",
        "--out",
        synth.to_str().unwrap(),
        "--lane-change-slots",
        "2",
        "--roundabout-vehicles",
        "2",
    ]);
    let out = crts(&[
        "validate",
        "--data",
        synth.join("synth-roundabout.crtd").to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 2 + 1, "{text}");
    assert!(text.contains("# 2 tracks, 0 flagged"), "{text}");
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_crts"))
        .args(["eval", "--suite", "/nonexistent/suite.crts"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bundled_suite_is_current() {
    let path = common::bundled_suite_path();
    let dir = tempfile::tempdir().unwrap();
    crts(&["synth", "--out", dir.path().to_str().unwrap()]);
    for f in [
        "suite.crts",
        "synth-highway.crtd",
        "synth-highway.crtm",
        "synth-roundabout.crtd",
        "synth-roundabout.crtm",
    ] {
        let bundled = std::fs::read(path.parent().unwrap().join(f)).unwrap();
        let fresh = std::fs::read(dir.path().join(f)).unwrap();
        assert!(bundled == fresh, "{f} differs from a fresh `crts synth`");
    }
}
