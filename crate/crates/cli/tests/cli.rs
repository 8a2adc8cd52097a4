use std::path::PathBuf;
use std::process::{Command, Output};

fn problem(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxgent")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// The value of `key` in CSV output.
fn csv_value(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("{key} missing from\n{out}"))
        .to_string()
}

fn csv_f64(out: &str, key: &str) -> f64 {
    csv_value(out, key).parse().unwrap()
}

#[test]
fn solve_imp() {
    let o = run(&["solve", &problem("imp")]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("x_star: (6.591, 5.326, 13.26, 1.12, 2.253, 2.789)"), "{s}");
    assert!(s.contains("g_star: 47.53"));
    assert!(s.contains("theta_inf: 2.9"));
    assert!(s.contains("nu_star: (7, 5, 14, 1, 2, 3)"));
}

#[test]
fn solve_first_and_vt() {
    let s = stdout(&run(&["solve", &problem("first"), "--format", "csv"]));
    assert_eq!(csv_value(&s, "rounding.nu_star"), "3,1,5");
    let s = stdout(&run(&["solve", &problem("vt"), "--format", "csv"]));
    assert!((csv_f64(&s, "solution.s_star") - 390.0).abs() < 1e-6);
    assert!((csv_f64(&s, "solution.g_star") - 964.62).abs() < 0.5);
}

#[test]
fn entropy_threshold_row_one() {
    let o = run(&[
        "threshold", &problem("imp"), "--delta", "0.01", "--epsilon", "1e-9", "--eta", "0.05", "--format", "csv",
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(csv_value(&s, "threshold.mode"), "entropy");
    assert!((csv_f64(&s, "threshold.c_hat") / 34.48 - 1.0).abs() < 5e-3);
    assert_eq!(csv_value(&s, "scaled.nu_star"), "227,184,457,39,78,96");
}

#[test]
fn auto_delta_threshold() {
    let o = run(&["threshold", &problem("imp"), "--mode", "auto-delta", "--epsilon", "1e-9", "--theta", "0.08", "--format", "csv"]);
    assert!(o.status.success());
    assert!((csv_f64(&stdout(&o), "threshold.c_hat") / 704.4 - 1.0).abs() < 1e-2);
}

#[test]
fn usage_errors_exit_3() {
    let o = run(&["threshold", &problem("imp"), "--eta", "0.05"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["solve", "/nonexistent/problem.json"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn threshold_condition_failure_exits_1() {
    // theta below the admissible minimum for this delta
    let o = run(&["threshold", &problem("imp"), "--delta", "0.5", "--epsilon", "1e-9", "--theta", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta must exceed"));
}

#[test]
fn verify_exit_codes() {
    let first = problem("first");
    let o = run(&["verify", &first]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("violations: 0"));
    assert_eq!(run(&["verify", &first, "--corrupt-bound", "1e6"]).status.code(), Some(1));
    assert_eq!(run(&["verify", &problem("imp"), "--budget", "1000"]).status.code(), Some(2));
    // x* of first scaled by 0.3 has entries below 1
    assert_eq!(run(&["verify", &first, "--scale-factor", "0.3"]).status.code(), Some(1));
}

#[test]
fn enumerate_csv_table() {
    let o = run(&["enumerate", &problem("first"), "--format", "csv"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "nu1,nu2,nu3,n,count,G");
    assert!(lines.iter().any(|l| l.starts_with("3,1,5,9,504,")));
    assert!(lines.iter().any(|l| l.starts_with("4,0,6,10,210,")));
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", &problem("first"), "--format", "csv"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let args = ["solve", &problem("vt")];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn text_and_csv_agree() {
    let text = stdout(&run(&["solve", &problem("imp")]));
    let csv = stdout(&run(&["solve", &problem("imp"), "--format", "csv"]));
    let g: f64 = csv_f64(&csv, "solution.g_star");
    assert!(text.contains(&format!("g_star: {}", format!("{g:.3e}").parse::<f64>().unwrap())));
    assert!(text.contains(&format!("nu_star: ({})", csv_value(&csv, "rounding.nu_star").replace(',', ", "))));
}

#[test]
fn scale_writes_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("imp2.json");
    let o = run(&["scale", &problem("imp"), "--scale-factor", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let s = stdout(&run(&["solve", out.to_str().unwrap(), "--format", "csv"]));
    let base = stdout(&run(&["solve", &problem("imp"), "--format", "csv"]));
    let (g2, g1) = (csv_f64(&s, "solution.g_star"), csv_f64(&base, "solution.g_star"));
    assert!((g2 / g1 - 2.0).abs() < 1e-9);
    assert!((csv_f64(&s, "bounds.theta_inf") - 5.8).abs() < 1e-9);
}
