use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pess")).args(args).output().expect("run pess")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn verify_accepts_optimal_pair() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "pair.txt", "2 2\n-1 0 0\n1 0 0\n");
    let o = pess(&["verify", &f]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("density=0.250000000000"), "{out}");
    assert!(out.contains("feasible"));
}

#[test]
fn verify_reports_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "close.txt", "2 3\n-0.95 0 0\n0.95 0 0\n");
    let o = pess(&["verify", &f]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("pair (1, 2): overlap 1.000000e-1"), "{out}");
}

#[test]
fn verify_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "neg.txt", "1 -1\n0 0 0\n");
    let o = pess(&["verify", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("neg.txt:1:"));
    let f = write(dir.path(), "short.txt", "2 3\n0 0 0\n");
    assert_eq!(pess(&["verify", &f]).status.code(), Some(2));
    assert_eq!(pess(&["verify", "/definitely/not/here.txt"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(pess(&[]).status.code(), Some(2));
    assert_eq!(pess(&["solve"]).status.code(), Some(2));
    assert_eq!(pess(&["solve", "--n", "0", "--time", "1s", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn solve_writes_verifiable_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let records = write(dir.path(), "records.csv", "n,radius\n2,2.0\n");
    let o = pess(&[
        "solve",
        "--n",
        "2",
        "--time",
        "20s",
        "--seed",
        "5",
        "--runs",
        "2",
        "--out",
        out,
        "--records",
        &records,
        "--max-rounds",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("n0002_"))
        .collect();
    assert_eq!(files.len(), 2);
    for f in &files {
        assert_eq!(pess(&["verify", f.to_str().unwrap(), "--tol", "1e-7"]).status.code(), Some(0));
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("n,r_best,r_avg,delta_best,delta_avg,hr,rr,density_best,time_to_best_s,seed_base,runs")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    assert!((row[1].parse::<f64>().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(row[6], "1.0");
    assert_eq!(row[9], "5");
    assert_eq!(row[10], "2");

    let o = pess(&["compare", "--summary", dir.path().join("summary.csv").to_str().unwrap(), "--records", &records]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("equal 1"), "{}", stdout(&o));
}

#[test]
fn anm_experiment_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("anm.csv");
    let o = pess(&["anm-exp", "--n-list", "10,20", "--runs", "2", "--out", csv.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,runs,avg_runtime_anm_s,avg_runtime_brute_s,runtime_ratio,avg_deferring_ratio");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("10,2,"));
}
