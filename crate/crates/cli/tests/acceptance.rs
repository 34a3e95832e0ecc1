//! Acceptance criterion 9: running the bare-coupling and registration
//! experiments from the same config core produces the failed/satisfied
//! objectification contrast, with byte-deterministic reports modulo the
//! timestamp field.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sepsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read_report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|line| !line.contains("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_9_end_to_end_contrast() {
    let dir = tempfile::tempdir().unwrap();
    let bcl_config = configs_dir().join("bcl_contrast.json");
    let reg_config = configs_dir().join("registration.json");

    // The two shipped configs share their core and differ only in the
    // experiment selector.
    let mut bcl_value: Value =
        serde_json::from_str(&std::fs::read_to_string(&bcl_config).unwrap()).unwrap();
    let mut reg_value: Value =
        serde_json::from_str(&std::fs::read_to_string(&reg_config).unwrap()).unwrap();
    assert_eq!(bcl_value["experiment"], "bcl");
    assert_eq!(reg_value["experiment"], "registration");
    bcl_value.as_object_mut().unwrap().remove("experiment");
    reg_value.as_object_mut().unwrap().remove("experiment");
    assert_eq!(bcl_value, reg_value, "config cores must be identical");

    let bcl_out = dir.path().join("bcl_report.json");
    let output = sepsim(&[
        "run",
        "--config",
        bcl_config.to_str().unwrap(),
        "--out",
        bcl_out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(output.status.success(), "{output:?}");
    let bcl_report = read_report(&bcl_out);
    assert_eq!(bcl_report["experiment"], "bcl");
    assert_eq!(bcl_report["metrics"]["objectification"], "failed");
    assert_eq!(bcl_report["metrics"]["condition_b"], false);
    // The premeasurement identities still hold on the bare coupling.
    for assertion in bcl_report["assertions"].as_array().unwrap() {
        assert_eq!(assertion["pass"], true, "bcl assertion failed: {assertion}");
    }

    let reg_out = dir.path().join("registration_report.json");
    let output = sepsim(&[
        "run",
        "--config",
        reg_config.to_str().unwrap(),
        "--out",
        reg_out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(output.status.success(), "{output:?}");
    let reg_report = read_report(&reg_out);
    assert_eq!(reg_report["experiment"], "registration");
    assert_eq!(reg_report["metrics"]["objectification"], "satisfied");
    assert_eq!(reg_report["metrics"]["satisfied"], true);
    for assertion in reg_report["assertions"].as_array().unwrap() {
        assert_eq!(
            assertion["pass"], true,
            "registration assertion failed: {assertion}"
        );
    }

    // Byte determinism modulo the timestamp field.
    let reg_out_again = dir.path().join("registration_report_again.json");
    let output = sepsim(&[
        "run",
        "--config",
        reg_config.to_str().unwrap(),
        "--out",
        reg_out_again.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(output.status.success());
    let first = strip_timestamp(&std::fs::read_to_string(&reg_out).unwrap());
    let second = strip_timestamp(&std::fs::read_to_string(&reg_out_again).unwrap());
    assert_eq!(first, second, "reports must be byte-identical modulo timestamp");

    println!(
        "criterion 9 PASS: bare coupling fails objectification, registration satisfies it, reports deterministic"
    );
}
