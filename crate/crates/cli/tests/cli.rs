use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn krv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krv"))
        .args(args)
        .output()
        .expect("spawn krv")
}

fn write_sample(path: &Path, values: &[f64]) {
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    fs::write(path, text).unwrap();
}

#[test]
fn eval_propagates_sum_of_samples() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y, out) = (
        dir.path().join("x.txt"),
        dir.path().join("y.txt"),
        dir.path().join("z.json"),
    );
    write_sample(&x, &[1.0, 2.0, 3.0]);
    write_sample(&y, &[10.0, 20.0]);
    let status = krv(&[
        "eval",
        "--expr",
        "X + Y",
        "--var",
        &format!("X={}", x.display()),
        "--var",
        &format!("Y={}", y.display()),
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let mu = kernel_rv::io::read_expansion_json(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(mu.len(), 6);
    let total: f64 = mu.weights().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn eval_reports_parse_errors_with_exit_code_two() {
    let output = krv(&["eval", "--expr", "X + * Y"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!output.stderr.is_empty());
}

#[test]
fn eval_reports_domain_errors_with_exit_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.txt");
    write_sample(&x, &[-1.0, 2.0]);
    let output = krv(&[
        "eval",
        "--expr",
        "log(X)",
        "--var",
        &format!("X={}", x.display()),
    ]);
    assert_eq!(
        output.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn reduce_then_mmd_is_small_at_full_size() {
    let dir = tempfile::tempdir().unwrap();
    let (x, reduced) = (dir.path().join("x.txt"), dir.path().join("r.csv"));
    write_sample(&x, &[0.1, 0.4, 0.9, 1.3, 2.2, 2.8]);
    let output = krv(&[
        "reduce",
        "--input",
        x.to_str().unwrap(),
        "--target",
        "6",
        "--out",
        reduced.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let output = krv(&[
        "mmd",
        "--left",
        x.to_str().unwrap(),
        "--right",
        reduced.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.lines().next(), Some("mmd_sq"));
    let value: f64 = stdout.lines().nth(1).unwrap().parse().unwrap();
    assert!(value.abs() < 1e-8, "{value}");
}

#[test]
fn suite_then_pairs_scores_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs");
    let report = dir.path().join("report.csv");
    let output = krv(&["suite", "--dir", pairs.to_str().unwrap(), "--size", "200"]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let output = krv(&[
        "pairs",
        "--dir",
        pairs.to_str().unwrap(),
        "--meta",
        pairs.join("meta.csv").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("pair_id,delta_xy,delta_yx,margin,decision,correct")
    );
    assert_eq!(text.lines().count(), 13);
    assert!(dir.path().join("report_curve.csv").exists());
}

#[test]
fn missing_input_file_is_an_input_error() {
    let output = krv(&["anm", "--input", "/nonexistent/pair.txt"]);
    assert_eq!(output.status.code(), Some(2));
}
