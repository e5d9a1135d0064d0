use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quartic_sos::format::{self, PayloadEncoding};
use quartic_sos::{Quadratic, QuarticForm};
use tempfile::TempDir;

fn qsos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsos"))
        .args(args)
        .env_remove("QSOS_THREADS")
        .output()
        .expect("spawn qsos")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = p(dir, name);
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", s(&out)]);
    let o = qsos(&all);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn residual_of(o: &Output) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("residual: "))
        .expect("residual line")
        .parse()
        .unwrap()
}

#[test]
fn gen_reports_counts_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.json");
    let o = qsos(&["gen", "uniform-sos", "--n", "10", "--seed", "0", "--out", s(&a)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("coefficients: 715"));
    assert!(stdout(&o).contains("sos-by-construction"));
    assert_eq!(format::read_coefficients(&a).unwrap().form.len(), 715);

    let b = gen(&dir, "b.json", &["uniform-sos", "--n", "10", "--seed", "0"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = qsos(&["gen", "uniform-sos", "--n", "20", "--seed", "0", "--out", s(&p(&dir, "c.json"))]);
    assert!(stdout(&o).contains("coefficients: 8855"));

    let o = qsos(&["gen", "non-sos-control", "--n", "4", "--out", s(&p(&dir, "d.json"))]);
    assert_eq!(code(&o), 0);
    assert!(!stdout(&o).contains("sos-by-construction"));
}

#[test]
fn gen_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    assert_ne!(code(&qsos(&["gen", "no-such-family", "--n", "3", "--out", s(&p(&dir, "x.json"))])), 0);
    assert_eq!(code(&qsos(&["gen", "uniform-sos", "--n", "1", "--out", s(&p(&dir, "x.json"))])), 1);
}

#[test]
fn binary_payload_round_trips_through_solve() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.json", &["spiked", "--n", "3", "--seed", "2", "--encoding", "binary"]);
    assert!(dir.path().join("t.json.bin").exists());
    let o = qsos(&["solve", s(&t), "--max-iters", "10"]);
    assert!(matches!(code(&o), 0 | 2));
}

#[test]
fn solve_certifies_uniform_instance() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.json", &["uniform-sos", "--n", "10", "--seed", "0"]);
    let cert = p(&dir, "cert.json");
    let trace = p(&dir, "trace.csv");
    let o = qsos(&["solve", s(&t), "--cert-out", s(&cert), "--trace-out", s(&trace)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(residual_of(&o) <= 1e-6);
    assert!(cert.exists());
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().next(), Some("iteration,squared_error,relative_error,wall_time_s"));
}

#[test]
fn non_sos_control_is_inconclusive() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.json", &["non-sos-control", "--n", "5"]);
    let cert = p(&dir, "cert.json");
    let o = qsos(&["solve", s(&t), "--max-iters", "5000", "--cert-out", s(&cert)]);
    assert_eq!(code(&o), 2);
    let text = stdout(&o).to_lowercase();
    assert!(text.contains("inconclusive"));
    assert!(text.contains("not evidence"));
    assert!(!cert.exists());
}

#[test]
fn one_square_cannot_fit_two_fourth_powers() {
    let dir = TempDir::new().unwrap();
    let target = QuarticForm::from_terms(2, [([0, 0, 0, 0], 1.0), ([1, 1, 1, 1], 1.0)]).unwrap();
    let t = p(&dir, "t.json");
    format::write_coefficients(&t, &target, None, PayloadEncoding::Inline).unwrap();
    let o = qsos(&["solve", s(&t), "--rank-k", "1", "--max-iters", "20000"]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));

    let o = qsos(&["solve", s(&t), "--rank-k", "2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn verify_accepts_match_and_rejects_tampering() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.json", &["uniform-sos", "--n", "6", "--seed", "3"]);
    let other = gen(&dir, "o.json", &["uniform-sos", "--n", "6", "--seed", "4"]);
    let cert = p(&dir, "cert.json");
    assert_eq!(code(&qsos(&["solve", s(&t), "--cert-out", s(&cert)])), 0);

    let o = qsos(&["verify", s(&cert), s(&t)]);
    assert_eq!(code(&o), 0);
    assert!(residual_of(&o) <= 1e-8);

    let o = qsos(&["verify", s(&cert), s(&other)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("wrong-target"));

    let mut c = format::read_certificate(&cert).unwrap();
    let q = &c.quadratics()[0];
    let mut coeffs = q.coeffs().to_vec();
    coeffs[0] += 0.1;
    c.quadratics_mut()[0] = Quadratic::new(q.n(), coeffs).unwrap();
    let tampered = p(&dir, "tampered.json");
    format::write_certificate(&tampered, &c).unwrap();
    let o = qsos(&["verify", s(&tampered), s(&t)]);
    assert_eq!(code(&o), 1);
    assert!(residual_of(&o) > 1e-8);
}

#[test]
fn pipeline_on_ten_seeds() {
    let dir = TempDir::new().unwrap();
    for seed in 0..10 {
        let seed = seed.to_string();
        let t = gen(&dir, &format!("t{seed}.json"), &["uniform-sos", "--n", "8", "--seed", &seed]);
        let cert = p(&dir, &format!("c{seed}.json"));
        let o = qsos(&["solve", s(&t), "--seed", &seed, "--cert-out", s(&cert)]);
        assert_eq!(code(&o), 0, "seed {seed}: {}", stdout(&o));
        assert_eq!(code(&qsos(&["verify", s(&cert), s(&t)])), 0, "seed {seed}");
    }
}

#[test]
fn bench_writes_rows_and_exponent() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "bench.csv");
    let o = qsos(&["bench", "--n-list", "4,5", "--seeds", "0..3", "--tol", "1e-4", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("scaling_exponent"));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kind,n,seed,wall_time_s,iterations,best_relative_error,converged,status");
    assert_eq!(lines.iter().filter(|l| l.starts_with("run,")).count(), 6);
    assert_eq!(lines.iter().filter(|l| l.starts_with("mean,")).count(), 2);
}

#[test]
fn malformed_input_is_an_error() {
    let dir = TempDir::new().unwrap();
    let bad = p(&dir, "bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&qsos(&["solve", s(&bad)])), 1);
    assert_eq!(code(&qsos(&["solve", s(&p(&dir, "missing.json"))])), 1);
}
