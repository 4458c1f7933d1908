use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tfade_core::solver::read_binary_matrix;
use tfade_core::SoeApproximation;

fn tfade(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfade"))
        .args(args)
        .current_dir(dir)
        .env("TFDE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn no_arguments_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfade(&[], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out) + &stderr(&out);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn alpha_out_of_range_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "experiment = solve\nalpha = 1.5\n").unwrap();
    let out = tfade(&["--config", "run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("0 < alpha < 1"), "{}", stderr(&out));

    fs::write(dir.path().join("bad.cfg"), "alpha = 0.5\nbeta = 2\n").unwrap();
    let out = tfade(&["table1", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.cfg"), "experiment=table1\nalpha=0.5\nn_max=160\n").unwrap();
    let layered = tfade(&["--config", "t.cfg", "--alpha", "0.3"], dir.path());
    assert!(layered.status.success(), "{}", stderr(&layered));
    let direct = tfade(&["table1", "--alpha", "0.3", "--n-max", "160"], dir.path());
    assert_eq!(stdout(&layered), stdout(&direct));
    let file_only = tfade(&["--config", "t.cfg"], dir.path());
    assert_ne!(stdout(&layered), stdout(&file_only));
}

#[test]
fn table1_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfade(&["table1", "--alpha", "0.1", "--r", "1.5", "--delta", "1.5", "--n-max", "640"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,error,order");
    assert_eq!(lines.len(), 5);
    let last: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(last[0], "640");
    let error: f64 = last[1].parse().unwrap();
    assert!((error / 1.3932e-6 - 1.0).abs() < 0.05, "{error}");
    assert_eq!(last[2], "1.9570");
}

#[test]
fn zero_problem_writes_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfade(
        &["solve", "--problem", "zero", "--N", "12", "--M", "6", "--L", "2", "--format", "binary", "-o", "u.bin"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let bytes = fs::read(dir.path().join("u.bin")).unwrap();
    let (rows, cols, data) = read_binary_matrix(&bytes[..]).unwrap();
    assert_eq!((rows, cols), (7, 13));
    assert!(data.iter().all(|&v| v == 0.0));
}

#[test]
fn csv_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = tfade(&["table2", "--n-max", "40", "--seed", "7", "-o", name], dir.path());
        assert!(out.status.success());
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("alpha,N,error,order\n"));
    let leftovers = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}

#[test]
fn solution_formats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["solve", "--alpha", "0.4", "--N", "8", "--M", "5"];
    let csv = tfade(&[&base[..], &["-o", "u.csv"]].concat(), dir.path());
    let bin = tfade(&[&base[..], &["--format", "binary", "-o", "u.bin"]].concat(), dir.path());
    assert!(csv.status.success() && bin.status.success());
    let text = fs::read_to_string(dir.path().join("u.csv")).unwrap();
    let (rows, cols, data) = read_binary_matrix(&fs::read(dir.path().join("u.bin")).unwrap()[..]).unwrap();
    assert_eq!((rows, cols), (6, 9));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,t,u"));
    for (k, line) in lines.enumerate() {
        let (n, i) = (k / rows, k % rows);
        let u: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(u, data[i * cols + n]);
    }
}

#[test]
fn stored_kernel_round_trips_and_drives_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfade(&["soe-check", "--alpha", "0.6", "--N", "40", "-o", "k.csv"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("k.csv")).unwrap();
    let soe: SoeApproximation<f64> = SoeApproximation::read_csv(text.as_bytes()).unwrap();
    let mut again = Vec::new();
    soe.write_csv(&mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), text);

    let args = ["solve", "--alpha", "0.6", "--N", "40", "--M", "8"];
    let stored = tfade(&[&args[..], &["--input", "k.csv"]].concat(), dir.path());
    let fresh = tfade(&args, dir.path());
    assert!(stored.status.success(), "{}", stderr(&stored));
    assert_eq!(stdout(&stored), stdout(&fresh));

    let wrong = tfade(&["solve", "--alpha", "0.3", "--input", "k.csv"], dir.path());
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn jsonl_rows_carry_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfade(&["table2", "--alpha", "0.5", "--n-max", "20", "--format", "jsonl"], dir.path());
    assert!(out.status.success());
    let rows: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["N"], 20);
    assert_eq!(rows[1]["alpha"], 0.5);
    assert!(rows[1]["order"].as_f64().unwrap() > 2.0);
}
