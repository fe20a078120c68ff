use std::fs;
use std::process::Command;

fn dnlab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dnlab")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let (code, stdout, _) = dnlab(&[
        "run", "--example", "1", "--theta", "0.45", "--n", "24", "--method", "new", "--parity", "even",
        "--max-iter", "6", "--tol", "0", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("theory="));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,l2_abs,l2_rel,h1_broken_rel,ratio"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn exit_codes() {
    assert_eq!(dnlab(&["run", "--example", "7", "--n", "20", "--theta", "0.5"]).0, 2);
    assert_eq!(dnlab(&["run", "--example", "1", "--n", "20", "--theta", "2"]).0, 2);
    assert_eq!(dnlab(&["run", "--example", "3", "--dim", "2", "--n", "20", "--theta", "0.5"]).0, 2);
    let (code, stdout, _) = dnlab(&[
        "run", "--example", "2", "--n", "20", "--theta", "0.5", "--method", "standard", "--parity", "odd",
        "--max-iter", "10", "--tol", "0",
    ]);
    assert_eq!(code, 4);
    assert!(stdout.contains("FAILURE"));
    let (code, _, stderr) = dnlab(&["sweep", "--example", "1", "--ns", "20"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("thetas"));
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "example = 1\nn = 16\ntheta = 0.3\nparity = \"even\"\nmax-iter = 3\n").unwrap();
    let (code, stdout, _) = dnlab(&["run", "--config", cfg.to_str().unwrap(), "--theta", "0.45"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("theta=0.45"));
    assert!(stdout.contains("iterations=3"));
}

#[test]
fn sweep_oracle_and_guess() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, stdout, _) = dnlab(&[
        "sweep", "--example", "1", "--parity", "even", "--thetas", "0.45,0.49", "--ns", "16,20", "--max-iter", "12",
        "--tol", "0", "--out", d,
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 5);
    assert!(dir.path().join("example1_new_even_theta0.49_n20.csv").exists());
    assert!(dir.path().join("sweep_summary.csv").exists());

    let (code, stdout, _) = dnlab(&["oracle", "--example", "2", "--n", "8"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 82);

    let (code, stdout, _) = dnlab(&["check-guess", "--example", "1", "--n", "8"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("max violation 0"));
}
