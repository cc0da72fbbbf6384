use std::process::Command;

fn skic(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_skic"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn gen_writes_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dp.jsonl");
    let result = skic(&[
        "gen", "--family", "dp", "--level", "8", "--count", "50", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 50);
}

#[test]
fn invalid_level_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.jsonl");
    let result = skic(&[
        "gen", "--family", "dp", "--level", "99", "--count", "1", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn zero_count_writes_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty.jsonl");
    let result = skic(&[
        "gen", "--family", "addition", "--level", "2", "--count", "0", "--seed", "1",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn missing_instance_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let result = skic(&[
        "prompt", "--instances", dir.path().join("nope.jsonl").to_str().unwrap(),
        "--variant", "SKIC", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let result = skic(&["gen", "--family", "dp"]);
    assert_eq!(result.status.code(), Some(2));
    let result = skic(&["no-such-subcommand"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn oracle_run_report_and_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let result = skic(&[
        "run", "--backend", "oracle", "--family", "addition", "--levels", "2..3",
        "--instances-per-cell", "2", "--run-dir", run_dir.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert!(run_dir.join("records.jsonl").exists());
    assert!(run_dir.join("manifest.json").exists());

    let records = run_dir.join("records.jsonl");
    let result = skic(&[
        "report", "--records", records.to_str().unwrap(), "--format", "csv",
    ]);
    assert!(result.status.success());
    let csv = String::from_utf8_lossy(&result.stdout);
    assert!(csv.starts_with("family,level,variant,n,accuracy"));
    assert!(csv.contains("addition,2,skic,2,1.0000"));

    let sft = dir.path().join("sft.jsonl");
    let result = skic(&[
        "export-sft", "--records", records.to_str().unwrap(), "--source", "records",
        "--out", sft.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert_eq!(std::fs::read_to_string(&sft).unwrap().lines().count(), 4);
}
