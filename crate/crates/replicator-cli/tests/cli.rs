//! End-to-end tests of the `replicator` binary: exit-code contract, output
//! determinism, and the documented behavior of each subcommand.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const PD_MODEL: &str = r#"{"type":"linear","B":[[4.0,0.0],[5.0,3.0]]}"#;
const PD_PAYOFF: &str = "[[4.0,0.0],[5.0,3.0]]";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_replicator"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.current_dir(dir).args(args);
    cmd.output().expect("binary should launch")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("binary should not be killed by a signal")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn workspace_with(files: &[(&str, &str)]) -> TempDir {
    let dir = tempfile::tempdir().expect("temp dir");
    for (name, content) in files {
        fs::write(dir.path().join(name), content).expect("write fixture");
    }
    dir
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).expect("output file should exist");
    serde_json::from_str(&text).expect("output should be valid JSON")
}

/// Parses a CSV produced by `simulate`/`hamiltonian`: header plus float rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).expect("output file should exist");
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .expect("csv should have a header")
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|line| {
            line.split(',')
                .map(|tok| tok.parse::<f64>().expect("numeric csv cell"))
                .collect()
        })
        .collect();
    (header, rows)
}

#[test]
fn simulate_drives_cooperation_extinct() {
    let dir = workspace_with(&[("pd.json", PD_MODEL)]);
    let out = run_in(
        dir.path(),
        &[
            "simulate", "--model", "pd.json", "--x0", "0.9,0.1", "--dt", "1e-3", "--t-end", "10",
            "--out", "traj.csv",
        ],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_text(&out));

    let (header, rows) = read_csv(&dir.path().join("traj.csv"));
    assert_eq!(header, ["t", "x1", "x2"]);
    assert_eq!(rows.len(), 10_001);
    let last = rows.last().unwrap();
    assert!(
        last[1] <= 1e-3,
        "first coordinate should be driven to extinction, got {}",
        last[1]
    );
    let sum: f64 = last[1..].iter().sum();
    assert!((sum - 1.0).abs() <= 1e-9);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = workspace_with(&[("pd.json", PD_MODEL)]);
    for out_name in ["a.csv", "b.csv"] {
        let out = run_in(
            dir.path(),
            &[
                "simulate", "--model", "pd.json", "--x0", "0.9,0.1", "--dt", "1e-3", "--t-end",
                "2", "--out", out_name,
            ],
        );
        assert_eq!(exit_code(&out), 0);
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b, "identical invocations should produce identical bytes");
}

#[test]
fn simulate_rejects_states_off_the_simplex() {
    let dir = workspace_with(&[("pd.json", PD_MODEL)]);
    let out = run_in(
        dir.path(),
        &[
            "simulate", "--model", "pd.json", "--x0", "0.5,0.6", "--dt", "1e-3", "--t-end", "1",
            "--out", "traj.csv",
        ],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).contains("error"));
    assert!(!dir.path().join("traj.csv").exists());
}

#[test]
fn simulate_rejects_unknown_method() {
    let dir = workspace_with(&[("pd.json", PD_MODEL)]);
    let out = run_in(
        dir.path(),
        &[
            "simulate", "--model", "pd.json", "--x0", "0.9,0.1", "--dt", "1e-3", "--t-end", "1",
            "--method", "leapfrog", "--out", "traj.csv",
        ],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let dir = workspace_with(&[]);
    let out = run_in(
        dir.path(),
        &["simulate", "--x0", "0.9,0.1", "--dt", "1e-3", "--t-end", "1", "--out", "t.csv"],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn unreadable_model_file_is_a_usage_error() {
    let dir = workspace_with(&[]);
    let out = run_in(
        dir.path(),
        &[
            "simulate", "--model", "missing.json", "--x0", "0.9,0.1", "--dt", "1e-3", "--t-end",
            "1", "--out", "t.csv",
        ],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).contains("missing.json"));
}

#[test]
fn hamiltonian_replicator_init_holds_zero_energy() {
    let dir = workspace_with(&[("pd.json", PD_MODEL)]);
    let out = run_in(
        dir.path(),
        &[
            "hamiltonian", "--model", "pd.json", "--y0", "0.6", "--replicator-init", "--dt",
            "1e-3", "--t-end", "1", "--out", "phase.csv",
        ],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_text(&out));

    let (header, rows) = read_csv(&dir.path().join("phase.csv"));
    assert_eq!(header, ["t", "y1", "p1", "H"]);
    assert_eq!(rows.len(), 1001);
    let max_h = rows.iter().map(|r| r[3].abs()).fold(0.0f64, f64::max);
    assert!(max_h <= 1e-6, "energy should stay at zero, worst |H| = {max_h:e}");
}

#[test]
fn hamiltonian_accepts_explicit_momentum() {
    let dir = workspace_with(&[("pd.json", PD_MODEL)]);
    let out = run_in(
        dir.path(),
        &[
            "hamiltonian", "--model", "pd.json", "--y0", "0.6", "--p0", "-3.6", "--dt", "1e-3",
            "--t-end", "0.5", "--out", "phase.csv",
        ],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_text(&out));
    let (_, rows) = read_csv(&dir.path().join("phase.csv"));
    assert_eq!(rows.len(), 501);
}

#[test]
fn hamiltonian_requires_exactly_one_momentum_source() {
    let dir = workspace_with(&[("pd.json", PD_MODEL)]);
    let neither = run_in(
        dir.path(),
        &[
            "hamiltonian", "--model", "pd.json", "--y0", "0.6", "--dt", "1e-3", "--t-end", "1",
            "--out", "p.csv",
        ],
    );
    assert_eq!(exit_code(&neither), 2);

    let both = run_in(
        dir.path(),
        &[
            "hamiltonian", "--model", "pd.json", "--y0", "0.6", "--p0", "1.0",
            "--replicator-init", "--dt", "1e-3", "--t-end", "1", "--out", "p.csv",
        ],
    );
    assert_eq!(exit_code(&both), 2);
}

#[test]
fn periodic_finds_the_orbit_on_a_reachable_level() {
    let dir = workspace_with(&[("payoff.json", PD_PAYOFF)]);
    let out = run_in(
        dir.path(),
        &[
            "periodic", "--payoff", "payoff.json", "--c", "-1", "--t-max", "10", "--out",
            "orbit.json",
        ],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_text(&out));

    let report = read_json(&dir.path().join("orbit.json"));
    assert_eq!(report["verdict"], "periodic");
    let turning = report["turning_points"].as_array().unwrap();
    assert_eq!(turning.len(), 2);
    assert!(report["return_distance"].as_f64().unwrap() <= 1e-3);
    assert!(report["period_estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn periodic_reports_empty_levels_without_failing() {
    let dir = workspace_with(&[("payoff.json", PD_PAYOFF)]);
    let out = run_in(
        dir.path(),
        &["periodic", "--payoff", "payoff.json", "--c", "-2", "--out", "orbit.json"],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_text(&out));
    let report = read_json(&dir.path().join("orbit.json"));
    assert_eq!(report["verdict"], "not-detected");
}

#[test]
fn periodic_rejects_nonsquare_payoff() {
    let dir = workspace_with(&[("payoff.json", "[[1.0,2.0],[3.0]]")]);
    let out = run_in(
        dir.path(),
        &["periodic", "--payoff", "payoff.json", "--c", "-1", "--out", "orbit.json"],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn controllability_withholds_on_repeated_rates() {
    let dir = workspace_with(&[]);
    let out = run_in(
        dir.path(),
        &["controllability", "--a", "1,1", "--B", "id", "--out", "report.json"],
    );
    assert_eq!(exit_code(&out), 3, "stderr: {}", stderr_text(&out));

    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["verdict"], "withheld");
    let failures = report["hypotheses"]["failures"].as_array().unwrap();
    assert!(!failures.is_empty(), "the report should name the violated hypothesis");
    assert!(report["bundle"].is_null());
}

#[test]
fn controllability_certifies_distinct_positive_rates() {
    let dir = workspace_with(&[("b3.json", "[[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]")]);
    let identity = run_in(
        dir.path(),
        &[
            "controllability", "--a", "1,2", "--B", "id", "--samples", "20", "--seed", "3",
            "--out", "r2.json",
        ],
    );
    assert_eq!(exit_code(&identity), 0, "stderr: {}", stderr_text(&identity));
    let r2 = read_json(&dir.path().join("r2.json"));
    assert_eq!(r2["verdict"], "controllable");
    assert!(r2["bundle"]["sigma_min_R"].as_f64().unwrap() > 0.0);

    let from_file = run_in(
        dir.path(),
        &[
            "controllability", "--a", "1,2,3", "--B", "b3.json", "--samples", "20", "--seed",
            "3", "--out", "r3.json",
        ],
    );
    assert_eq!(exit_code(&from_file), 0, "stderr: {}", stderr_text(&from_file));
    let r3 = read_json(&dir.path().join("r3.json"));
    assert_eq!(r3["verdict"], "controllable");
    assert_eq!(r3["samples"].as_array().unwrap().len(), 20);
}

#[test]
fn bracket_certifies_a_structured_pair() {
    let dir = workspace_with(&[
        ("pd.json", PD_MODEL),
        ("const.json", r#"{"type":"constant","a":[1.0,-0.5]}"#),
    ]);
    let out = run_in(
        dir.path(),
        &[
            "bracket", "--model-a", "const.json", "--model-b", "pd.json", "--samples", "10",
            "--seed", "7", "--out", "bracket.json",
        ],
    );
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_text(&out));

    let report = read_json(&dir.path().join("bracket.json"));
    let max_residual = report["max_residual"].as_f64().unwrap();
    assert!(max_residual <= 1e-6, "structured pair should certify, got {max_residual:e}");
    for key in ["points", "skew", "linearity", "jacobi", "homomorphism"] {
        assert_eq!(report[key].as_array().unwrap().len(), 10, "field {key}");
    }
}

#[test]
fn bracket_failure_exits_three_but_writes_the_report() {
    let dir = workspace_with(&[
        ("pd.json", PD_MODEL),
        ("const.json", r#"{"type":"constant","a":[1.0,-0.5]}"#),
    ]);
    let out = run_in(
        dir.path(),
        &[
            "bracket", "--model-a", "const.json", "--model-b", "pd.json", "--samples", "10",
            "--seed", "7", "--tol", "1e-30", "--out", "bracket.json",
        ],
    );
    assert_eq!(exit_code(&out), 3);
    let report = read_json(&dir.path().join("bracket.json"));
    assert!(report["max_residual"].as_f64().unwrap() > 1e-30);
}

#[test]
fn el_check_closes_the_loop_on_a_simulated_trajectory() {
    let dir = workspace_with(&[("pd.json", PD_MODEL)]);
    let sim = run_in(
        dir.path(),
        &[
            "simulate", "--model", "pd.json", "--x0", "0.9,0.1", "--dt", "1e-3", "--t-end", "2",
            "--out", "traj.csv",
        ],
    );
    assert_eq!(exit_code(&sim), 0);

    let check = run_in(
        dir.path(),
        &["el-check", "--model", "pd.json", "--traj", "traj.csv", "--out", "el.json"],
    );
    assert_eq!(exit_code(&check), 0, "stderr: {}", stderr_text(&check));

    let report = read_json(&dir.path().join("el.json"));
    let residual = report["euler_lagrange_residual"].as_f64().unwrap();
    assert!(
        residual < 1e-2,
        "a true replicator solution should nearly satisfy the equations, got {residual:e}"
    );
    assert_eq!(report["num_states"].as_i64().unwrap(), 2001);
    assert!((report["t_end"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn el_check_rejects_malformed_trajectories() {
    let dir = workspace_with(&[("pd.json", PD_MODEL), ("traj.csv", "t,x1,x2\n0.0,0.5\n")]);
    let out = run_in(
        dir.path(),
        &["el-check", "--model", "pd.json", "--traj", "traj.csv", "--out", "el.json"],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn json_reports_are_deterministic() {
    let dir = workspace_with(&[]);
    for name in ["r1.json", "r2.json"] {
        let out = run_in(
            dir.path(),
            &[
                "controllability", "--a", "1,2,3", "--B", "id", "--samples", "10", "--seed",
                "11", "--out", name,
            ],
        );
        assert_eq!(exit_code(&out), 0);
    }
    let a = fs::read(dir.path().join("r1.json")).unwrap();
    let b = fs::read(dir.path().join("r2.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn help_lists_all_subcommands() {
    let out = bin().arg("--help").output().expect("binary should launch");
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    for sub in ["simulate", "bracket", "hamiltonian", "periodic", "controllability", "el-check"] {
        assert!(text.contains(sub), "help should mention {sub}");
    }
}
