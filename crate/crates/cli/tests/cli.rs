//! End-to-end checks of the command-line interface: artifacts land on disk
//! with the documented fields, outputs are byte-identical across runs, and
//! exit codes follow the documented convention.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_doublewell"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("doublewell-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn solve_even_writes_expected_json() {
    let out = tmp("even.json");
    let status = bin()
        .args(["solve-even", "--g", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(doc["E_ev"].is_f64());
    assert_eq!(doc["converged"], serde_json::Value::Bool(true));
    assert!(doc["table"]["rows"].as_array().unwrap().len() > 100);
    std::fs::remove_file(&out).ok();
}

#[test]
fn series_csv_contains_exact_fourth_coefficient() {
    let out = tmp("series.csv");
    let status = bin()
        .args(["series", "--m-max", "4", "--format", "csv", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let body = std::fs::read_to_string(&out).unwrap();
    assert!(body.contains("e,4,,4515/16384,"), "missing row in:\n{body}");
    assert!(body.contains("alpha,4,7,315,"));
    assert!(!body.contains('\r'), "line endings must be bare LF");
    std::fs::remove_file(&out).ok();
}

#[test]
fn compare_differences_within_budget() {
    let out = tmp("compare.json");
    let status = bin()
        .args(["compare", "--g", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for level in ["E_ev", "E_plus", "E_od"] {
        let d = doc["difference"][level].as_f64().unwrap();
        assert!(d.abs() < 1e-6 * 5.0, "{level} difference {d}");
    }
    std::fs::remove_file(&out).ok();
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let out1 = tmp("det1.json");
    let out2 = tmp("det2.json");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["solve-odd", "--g", "4", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "repeated runs must serialize identically");
    std::fs::remove_file(&out1).ok();
    std::fs::remove_file(&out2).ok();
}

#[test]
fn bounds_report_round_trips_and_passes() {
    let out = tmp("bounds.json");
    let status = bin()
        .args(["bounds", "--g", "6", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["report"]["status"], "Pass");
    let entries = doc["report"]["entries"].as_array().unwrap();
    assert!(entries.len() >= 20);
    for e in entries {
        assert!(e["name"].is_string());
        assert!(e["anchor"].is_string());
    }
    assert_eq!(doc["tail_envelope"]["pass"], serde_json::Value::Bool(true));
    std::fs::remove_file(&out).ok();
}

#[test]
fn exit_codes_follow_convention() {
    // invalid coupling -> 1
    let status = bin().args(["solve-even", "--g", "0.5"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
    // unknown flag -> 1
    let status = bin()
        .args(["solve-even", "--g", "5", "--bogus"])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    // bounds below the proven regime -> 2 (ran, with a warning)
    let out = tmp("regime.json");
    let status = bin()
        .args(["bounds", "--g", "3", "--skeleton", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    std::fs::remove_file(&out).ok();
    // help -> 0
    let status = bin()
        .arg("--help")
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn oracle_command_reports_levels() {
    let out = tmp("oracle.json");
    let status = bin()
        .args(["oracle", "--g", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let ev = doc["oracle"]["e_even_extrap"].as_f64().unwrap();
    let od = doc["oracle"]["e_odd_extrap"].as_f64().unwrap();
    assert!(ev < od);
    std::fs::remove_file(&out).ok();
}

#[test]
fn sequential_compare_matches_threaded() {
    let out1 = tmp("thr.json");
    let out2 = tmp("seq.json");
    let status = bin()
        .args(["compare", "--g", "3", "--out"])
        .arg(&out1)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args(["compare", "--g", "3", "--out"])
        .arg(&out2)
        .env("DOUBLEWELL_THREADS", "1")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out2).unwrap(),
        "thread cap must not change results"
    );
    std::fs::remove_file(&out1).ok();
    std::fs::remove_file(&out2).ok();
}
