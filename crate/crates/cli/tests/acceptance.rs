//! Acceptance: the one-command reproduction run succeeds, and two runs
//! with the same seed produce byte-identical reports.

use std::fs;
use std::process::Command;

#[test]
fn acceptance_11_reproduce_is_deterministic_and_green() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    let mut reports = Vec::new();
    for run in 0..2 {
        let report_path = dir.path().join(format!("report-{run}.json"));
        let output = Command::new(env!("CARGO_BIN_EXE_sdilab"))
            .args([
                "reproduce",
                "--seed",
                "0",
                "--out",
                report_path.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        assert!(
            output.status.success(),
            "reproduce failed:\n{}",
            String::from_utf8_lossy(&output.stdout)
        );
        let stdout = String::from_utf8(output.stdout).unwrap();
        for id in 1..=10 {
            assert!(
                stdout.contains(&format!("PASS {id:02}")),
                "item {id} not passing:\n{stdout}"
            );
        }
        outputs.push(stdout);
        reports.push(fs::read(&report_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "stdout differs between runs");
    assert_eq!(reports[0], reports[1], "report bytes differ between runs");

    // The report is well-formed JSON that round-trips through a reparse.
    let value: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(value["all_passed"], true);
    assert_eq!(value["items"].as_array().unwrap().len(), 10);
}
