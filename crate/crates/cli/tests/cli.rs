use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracfast(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracfast"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FRACFAST_REFDIR")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

#[test]
fn props_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracfast(&["run", "--experiment", "props", "--outdir", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("o/props.csv")).unwrap();
    assert!(csv.starts_with("property,pass,detail\n"));
    assert!(!csv.contains(",false,"));
    let trace = fs::read_to_string(dir.path().join("o/props_trace.csv")).unwrap();
    assert!(trace.lines().any(|l| l.starts_with("10,4,") && l.ends_with(",9 8 6 4 0")));
    assert!(dir.path().join("o/props_plot.dat").exists());
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracfast(&["run", "--experiment", "tableX"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tableX") && err.contains("table41"), "{err}");
    assert!(!err.contains("missing experiment"));
}

#[test]
fn all_config_errors_listed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "alpha = zero\nNtau = 1\ncolour = blue\n").unwrap();
    let out = fracfast(&["run", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["alpha", "ntau", "colour", "missing experiment"] {
        assert!(err.contains(needle), "{needle} not in {err}");
    }
}

#[test]
fn deterministic_csv_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("t1.cfg"),
        "experiment = table1\nalpha = 0.5\nmethods = l1,faom-p4\nlevels = 2\ntimings = false\noutdir = a\n",
    )
    .unwrap();
    let first = fracfast(&["run", "--config", "t1.cfg", "--alpha", "0.9"], dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = fracfast(&["run", "--config", "t1.cfg", "--alpha", "0.9", "--outdir", "b"], dir.path());
    assert_eq!(second.status.code(), Some(0));
    let a = fs::read(dir.path().join("a/table1.csv")).unwrap();
    let b = fs::read(dir.path().join("b/table1.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    // flag alpha replaced the file's; two methods times two grids
    assert_eq!(text.lines().count(), 5, "{text}");
    assert!(text.lines().skip(1).all(|l| l.starts_with("linear,0.9,") && l.ends_with(",0.000")));
}

#[test]
fn check_embeds_printed_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracfast(
        &["run", "--experiment", "table1", "--alpha", "0.9", "--methods", "l1", "--check", "--no-timings"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("out/table1.csv")).unwrap();
    assert!(csv.contains("# printed Linear alpha=0.9 L1: E 3.66e-1 1.62e-1 7.39e-2 3.41e-2 1.58e-2"));
    assert!(csv.lines().filter(|l| l.starts_with("# check PASS")).count() >= 9);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().all(|l| !l.starts_with("FAIL")));
}

#[test]
fn refdir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("cache");
    let out = Command::new(env!("CARGO_BIN_EXE_fracfast"))
        .args(["run", "--experiment", "huxley", "--alpha", "0.5", "--methods", "l1", "--levels", "2", "--jobs", "1"])
        .current_dir(dir.path())
        .env("FRACFAST_REFDIR", &refs)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cached = fs::read_dir(&refs).unwrap().count();
    assert!(cached >= 2, "expected reference files for both sweeps, found {cached}");
    let csv = fs::read_to_string(dir.path().join("out/huxley.csv")).unwrap();
    // time and space sweeps, two grids each
    assert_eq!(csv.lines().count(), 1 + 2 + 2);
}
