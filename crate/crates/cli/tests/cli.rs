use std::process::{Command, Output};

use serde_json::Value;

use cvconj::{EprReport, EstimationReport};
use cvconj_cli::commands::{ConjugateReport, FidelityReport, SolveReport};

fn cvconj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvconj"))
        .args(args)
        .output()
        .expect("spawn cvconj")
}

fn stdout_of(args: &[&str]) -> String {
    let out = cvconj(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(args: &[&str]) -> (i32, String) {
    let out = cvconj(args);
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn estimate_entangled_reaches_a_quarter() {
    let text = stdout_of(&[
        "estimate",
        "--strategy",
        "conjugate-entangled",
        "--alpha-x",
        "1",
        "--alpha-p",
        "2",
        "--shots",
        "100000",
        "--seed",
        "7",
        "--format",
        "json",
    ]);
    let report: EstimationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.shots, 100_000);
    assert_eq!(report.seed, 7);
    assert!((report.est_var_x - 0.25).abs() < 5.0 * report.stderr_x);
    assert!((report.est_var_p - 0.25).abs() < 5.0 * report.stderr_p);
}

#[test]
fn conjugate_example() {
    let report: ConjugateReport = serde_json::from_str(&stdout_of(&["conjugate", "--alpha-x", "1", "--alpha-p", "2"])).unwrap();
    assert_eq!(report.mean, [1.0, -2.0]);
    assert_eq!(report.cov, [[1.5, 0.0], [0.0, 1.5]]);
    assert!((report.fidelity - 0.5).abs() < 1e-12);
    assert!((report.added_noise - 1.0).abs() < 1e-12);
}

#[test]
fn epr_bound_csv_decreases_towards_one() {
    let text = stdout_of(&["epr-bound", "--r-grid", "0:5:0.5", "--sigma2", "1"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,sigma2,var_Xp,var_Pp,product"));
    let products: Vec<f64> = lines
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(products.len(), 11);
    assert!(products.windows(2).all(|w| w[1] < w[0]));
    assert!(products.iter().all(|&p| p >= 1.0));
    assert!(products[10] - 1.0 < 1e-3);
    assert!(!text.contains('\r'));
}

#[test]
fn epr_bound_json_round_trips() {
    let text = stdout_of(&["epr-bound", "--r-grid", "0:1:0.25", "--format", "json"]);
    let rows: Vec<EprReport> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 5);
    let again = serde_json::to_value(&rows).unwrap();
    assert_eq!(again, serde_json::from_str::<Value>(&text).unwrap());
}

#[test]
fn solve_and_fidelity_reports_parse() {
    let solve: SolveReport = serde_json::from_str(&stdout_of(&["solve", "--shots", "500"])).unwrap();
    assert!((solve.row1.m12 - 2f64.sqrt()).abs() < 1e-12);
    assert!(solve.grid_scan.unique_near_solution);
    assert_eq!(solve.random_search.counterexamples, 0);
    assert!(solve.ancilla_row.residuals.iter().all(|r| r.satisfied));

    let fid: FidelityReport = serde_json::from_str(&stdout_of(&["fidelity", "--alpha-x", "5", "--alpha-p", "-5"])).unwrap();
    assert!((fid.fidelity - 0.5).abs() < 1e-12);
    let mp = &fid.measure_prepare;
    assert!((mp.overlap_mean - 0.5).abs() < 5.0 * mp.overlap_stderr);
}

#[test]
fn exit_codes_and_diagnostics() {
    let (code, err) = exit_code(&["epr-bound", "--sigma2", "0.5"]);
    assert_eq!(code, 3);
    assert_eq!(err.lines().count(), 1, "{err}");

    for args in [
        &["estimate", "--strategy", "nope"][..],
        &["estimate"],
        &["estimate", "--strategy", "parallel-product", "--shots", "99"],
        &["epr-bound", "--r-grid", "0:5:0"],
        &["epr-bound", "--r-grid", "5:0:1"],
        &["conjugate", "--alpha-x", "nan"],
        &["frobnicate"],
    ] {
        let (code, err) = exit_code(args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
    }

    assert_eq!(exit_code(&["--help"]).0, 0);
}

#[test]
fn unphysical_mode_reports_the_violation() {
    let text = stdout_of(&["epr-bound", "--r-grid", "3:3:1", "--sigma2", "0.5", "--allow-unphysical"]);
    let product: f64 = text.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!(product < 1.0);
}

#[test]
fn out_flag_writes_identical_bytes() {
    let dir = std::env::temp_dir().join(format!("cvconj-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let args = ["estimate", "--strategy", "conjugate-product", "--shots", "5000", "--seed", "3"];
    let printed = stdout_of(&args);
    let out = cvconj(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert!(out.status.success() && out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["fidelity", "--alpha-x", "1", "--shots", "30000", "--seed", "11"];
    let one = stdout_of(&[&args[..], &["--threads", "1"]].concat());
    let eight = stdout_of(&[&args[..], &["--threads", "8"]].concat());
    assert_eq!(one, eight);
    assert_eq!(one, stdout_of(&args));
    let other_seed = stdout_of(&["fidelity", "--alpha-x", "1", "--shots", "30000", "--seed", "12"]);
    assert_ne!(one, other_seed);
}
