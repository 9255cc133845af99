use std::path::Path;
use std::process::{Command, Output};

use verikit::fcov::{read_coverage_db, write_coverage_db, CoverageDb};

fn verikit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verikit"))
        .args(args)
        .env_remove("VERIKIT_LOG")
        .output()
        .expect("spawn verikit")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn list_prints_sorted_names() {
    let out = verikit(&["list"]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> = stdout(&out).lines().map(str::to_string).collect();
    assert_eq!(
        names,
        [
            "adc.feature_adc",
            "adc.feature_reg",
            "adc.stress",
            "alu.base",
            "ecc.base"
        ]
    );
    assert_eq!(stdout(&verikit(&["list"])), stdout(&out));
}

#[test]
fn run_writes_coverage_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("alu.xml");
    let out = verikit(&[
        "run",
        "--test",
        "alu.base",
        "--seed",
        "0x1",
        "--transactions",
        "200",
        "--cov-out",
        path_str(&cov),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).starts_with("PASS alu.base seed="));
    let db = read_coverage_db(&cov).unwrap();
    assert_eq!(db.test, "alu.base");
    assert_eq!(db.transactions, 200);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["run", "--test", "nope"][..],
        &["run", "--seed", "xyz"],
        &["run", "--transactions", "0"],
        &["run", "--log-level", "LOUD"],
        &["frobnicate"],
        &["bench", "--transactions", "0"],
    ] {
        assert_eq!(code(&verikit(args)), 64, "{args:?}");
    }
    assert_eq!(code(&verikit(&["--help"])), 0);
}

#[test]
fn unknown_test_rejected_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("never.xml");
    let out = verikit(&["run", "--test", "nope", "--cov-out", path_str(&cov)]);
    assert_eq!(code(&out), 64);
    assert!(stdout(&out).is_empty());
    assert!(!cov.exists());
}

#[test]
fn bad_env_log_level_exits_64() {
    let out = Command::new(env!("CARGO_BIN_EXE_verikit"))
        .args(["run", "--test", "alu.base", "--transactions", "1"])
        .env("VERIKIT_LOG", "chatty")
        .output()
        .unwrap();
    assert_eq!(code(&out), 64);
    let quiet = Command::new(env!("CARGO_BIN_EXE_verikit"))
        .args(["run", "--test", "alu.base", "--transactions", "1"])
        .env("VERIKIT_LOG", "ERROR")
        .output()
        .unwrap();
    assert_eq!(code(&quiet), 0);
}

#[test]
fn coverage_shortfall_exits_2() {
    let out = verikit(&[
        "run",
        "--test",
        "alu.base",
        "--transactions",
        "5",
        "--fail-under",
        "101",
    ]);
    assert_eq!(code(&out), 2);
    let out = verikit(&["run", "--test", "alu.base", "--transactions", "5", "--fail-under", "0"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn unwritable_coverage_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("missing").join("cov.xml");
    let out = verikit(&[
        "run",
        "--test",
        "alu.base",
        "--transactions",
        "5",
        "--cov-out",
        path_str(&cov),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn report_prints_table_and_applies_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("ecc.xml");
    let run = verikit(&[
        "run",
        "--test",
        "ecc.base",
        "--seed",
        "1",
        "--transactions",
        "30000",
        "--cov-out",
        path_str(&cov),
    ]);
    assert_eq!(code(&run), 0);
    let out = verikit(&["report", path_str(&cov)]);
    assert_eq!(code(&out), 0);
    let last = stdout(&out).lines().last().unwrap().to_string();
    assert!(last.starts_with("overall") && last.ends_with("95.00"), "{last}");
    assert_eq!(code(&verikit(&["report", path_str(&cov), "--fail-under", "95"])), 0);
    assert_eq!(code(&verikit(&["report", path_str(&cov), "--fail-under", "95.01"])), 2);
}

#[test]
fn report_empty_db() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("empty.xml");
    std::fs::write(&cov, write_coverage_db(&CoverageDb::default())).unwrap();
    let out = verikit(&["report", path_str(&cov)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).lines().last().unwrap().ends_with("0.00"));
}

#[test]
fn report_bad_input_exits_65() {
    let dir = tempfile::tempdir().unwrap();
    let corrupt = dir.path().join("corrupt.xml");
    std::fs::write(&corrupt, "<coverage><group").unwrap();
    assert_eq!(code(&verikit(&["report", path_str(&corrupt)])), 65);
    assert_eq!(
        code(&verikit(&["report", path_str(&dir.path().join("absent.xml"))])),
        65
    );
}

#[test]
fn bench_emits_csv_rows_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = verikit(&["bench", "--transactions", "50,100", "--csv", path_str(&csv)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "test,transactions,wall_seconds,sim_ns");
    let keys: Vec<String> = lines[1..]
        .iter()
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(keys, ["alu.base,50", "ecc.base,50", "alu.base,100", "ecc.base,100"]);
    for l in &lines[1..] {
        let wall: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!(wall >= 0.0);
    }
}
