//! End-to-end checks of the command-line front end: output of the sizing
//! report, a tiny search partition, and the exit-code contract.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_powersplit"))
}

#[test]
fn counts_prints_the_space_sizes() {
    let out = bin().arg("counts").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["38", "584193", "3024", "19085220", "166965986880"] {
        assert!(text.contains(needle), "missing {needle} in:\n{text}");
    }
}

#[test]
fn analyze_compares_two_designs() {
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/designs");
    let out = bin()
        .arg("analyze")
        .arg("--design")
        .arg(assets.join("benchmark_4cl.toml"))
        .arg("--design")
        .arg(assets.join("ecvt2.toml"))
        .arg("--cycle")
        .arg("us06")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("benchmark-4cl"));
    assert!(text.contains("improvement"));
}

#[test]
fn search_partition_writes_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("search")
        .arg("--range")
        .arg("3000000..3002000")
        .arg("--chunk")
        .arg("1000")
        .arg("--stage")
        .arg("dedupe")
        .arg("--cache-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("manifest.json").is_file());
    assert!(dir.path().join("unique.tsv").is_file());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("unique designs"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[nope]\nx = 1\n").unwrap();
    let out = bin()
        .arg("counts")
        .arg("--config")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let missing_design = bin()
        .arg("analyze")
        .arg("--design")
        .arg(dir.path().join("nope.toml"))
        .output()
        .unwrap();
    assert_eq!(missing_design.status.code(), Some(2));
}

#[test]
fn stage_failures_exit_with_code_three() {
    // An out-of-range partition is a stage failure, not a config error.
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("search")
        .arg("--range")
        .arg("0..99999999999")
        .arg("--cache-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
