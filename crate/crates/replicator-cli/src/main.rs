//! Command-line interface for the replicator-dynamics toolbox.
//!
//! Six subcommands cover the library surface: `simulate` integrates the
//! replicator flow, `bracket` certifies the Lie-algebra structure of a pair
//! (or triple) of fitness maps, `hamiltonian` integrates the chart-space
//! phase flow, `periodic` detects closed two-strategy orbits on an energy
//! level, `controllability` runs the sampled spanning check for
//! constant-plus-matrix-game control systems, and `el-check` measures the
//! Euler–Lagrange residual of a stored trajectory.
//!
//! Exit codes: `0` success, `2` invalid arguments or configuration,
//! `3` numerical failure (integration breakdown, hypothesis violation, or a
//! negative verdict from a check). Diagnostics go to stderr; result files are
//! written deterministically, so repeated runs produce byte-identical output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use replicator::controllability::{controllability_verdict, ControllabilityVerdict};
use replicator::dynamics::{integrate_replicator, Method, Trajectory};
use replicator::fitness::{bracket_axiom_report, FitnessModel};
use replicator::simplex::{sample_interior, SimplexPoint};
use replicator::variational::{
    detect_periodic_orbit, euler_lagrange_residual, integrate_hamiltonian, replicator_momentum,
    OrbitVerdict, DEFAULT_ORBIT_DT, DEFAULT_ORBIT_T_MAX,
};
use replicator::{Error, Result};

/// Default sample count for the bracket certification report.
const DEFAULT_BRACKET_SAMPLES: usize = 50;
/// Default residual tolerance for the bracket certification report.
const DEFAULT_BRACKET_TOL: f64 = 1e-6;
/// Default sample count for the controllability spanning check.
const DEFAULT_CONTROLLABILITY_SAMPLES: usize = 100;

#[derive(Parser)]
#[command(
    name = "replicator",
    version,
    about = "Replicator-dynamics toolbox: flows, brackets, Hamiltonian orbits, controllability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the replicator flow from an interior state and write a CSV
    /// trajectory.
    Simulate {
        /// Fitness model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Initial state as comma-separated coordinates summing to one.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Fixed integration step.
        #[arg(long)]
        dt: f64,
        /// End time (the step count is `round(t_end / dt)`).
        #[arg(long = "t-end")]
        t_end: f64,
        /// Integration method: `rk4` or `midpoint`.
        #[arg(long, default_value = "rk4")]
        method: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the bracket axioms (skew-symmetry, linearity, Jacobi) and the
    /// flow homomorphism for a pair of fitness maps; write a JSON report.
    Bracket {
        /// First fitness model JSON file.
        #[arg(long = "model-a")]
        model_a: PathBuf,
        /// Second fitness model JSON file.
        #[arg(long = "model-b")]
        model_b: PathBuf,
        /// Third model for linearity and Jacobi probes (defaults to the first).
        #[arg(long = "model-c")]
        model_c: Option<PathBuf>,
        /// Number of interior sample points.
        #[arg(long, default_value_t = DEFAULT_BRACKET_SAMPLES)]
        samples: usize,
        /// Seed for the interior sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Residual tolerance for the pass/fail verdict.
        #[arg(long, default_value_t = DEFAULT_BRACKET_TOL)]
        tol: f64,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the chart-space Hamiltonian flow and write a CSV phase
    /// trajectory with an energy column.
    Hamiltonian {
        /// Fitness model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Initial chart position (n-1 comma-separated coordinates).
        #[arg(long, allow_hyphen_values = true)]
        y0: String,
        /// Initial momentum (n-1 comma-separated coordinates).
        #[arg(long, allow_hyphen_values = true, conflicts_with = "replicator_init")]
        p0: Option<String>,
        /// Start on the replicator solution family: the momentum that makes
        /// the phase flow shadow the replicator flow (zero energy).
        #[arg(long)]
        replicator_init: bool,
        /// Fixed integration step (implicit midpoint).
        #[arg(long)]
        dt: f64,
        /// End time.
        #[arg(long = "t-end")]
        t_end: f64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect a periodic orbit of the two-strategy phase flow on a negative
    /// energy level; write a JSON report.
    Periodic {
        /// Payoff matrix JSON file (2x2 row-major array).
        #[arg(long)]
        payoff: PathBuf,
        /// Energy level (must be negative).
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        /// Integration step for the orbit search.
        #[arg(long, default_value_t = DEFAULT_ORBIT_DT)]
        dt: f64,
        /// Time horizon for the orbit search.
        #[arg(long = "t-max", default_value_t = DEFAULT_ORBIT_T_MAX)]
        t_max: f64,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sampled controllability check for the system driven by a rate
    /// vector and a control matrix; write a JSON report.
    Controllability {
        /// Rate vector as comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        /// Control matrix: JSON file with a row-major array, or `id` for the
        /// identity.
        #[arg(long = "B")]
        b: String,
        /// Number of interior sample points.
        #[arg(long, default_value_t = DEFAULT_CONTROLLABILITY_SAMPLES)]
        samples: usize,
        /// Seed for the interior sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure the worst Euler–Lagrange residual of a stored trajectory under
    /// a fitness model; write a JSON report.
    ElCheck {
        /// Fitness model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Trajectory CSV file (as written by `simulate`).
        #[arg(long)]
        traj: PathBuf,
        /// Output JSON path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Argument(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Simulate {
            model,
            x0,
            dt,
            t_end,
            method,
            out,
        } => {
            let f = load_model(&model)?;
            let x0 = SimplexPoint::new(parse_vector(&x0)?)?;
            let method: Method = method.parse()?;
            let traj = integrate_replicator(&f, &x0, dt, t_end, method)?;
            write_file(&out, &traj.to_csv())?;
            eprintln!("wrote {} ({} states)", out.display(), traj.len());
            Ok(0)
        }
        Command::Bracket {
            model_a,
            model_b,
            model_c,
            samples,
            seed,
            tol,
            out,
        } => {
            let f = load_model(&model_a)?;
            let g = load_model(&model_b)?;
            let h = match model_c {
                Some(path) => load_model(&path)?,
                None => f.clone(),
            };
            let points = sample_interior(f.dim(), samples, seed)?;
            let mut report = bracket_axiom_report(&f, &g, &h, &points, tol)?;
            let mut hom = Vec::with_capacity(points.len());
            for x in &points {
                hom.push(replicator::dynamics::homomorphism_residual(
                    &f,
                    &g,
                    std::slice::from_ref(x),
                )?);
            }
            report.set_homomorphism(hom);
            let passed = report.passes();
            write_json(&out, &report)?;
            if passed {
                eprintln!(
                    "wrote {} (max residual {:e} within {:e})",
                    out.display(),
                    report.max_residual,
                    report.tol
                );
                Ok(0)
            } else {
                eprintln!(
                    "bracket check failed: max residual {:e} exceeds {:e} (report at {})",
                    report.max_residual,
                    report.tol,
                    out.display()
                );
                Ok(3)
            }
        }
        Command::Hamiltonian {
            model,
            y0,
            p0,
            replicator_init,
            dt,
            t_end,
            out,
        } => {
            let f = load_model(&model)?;
            let y0 = parse_vector(&y0)?;
            let p0 = match (p0, replicator_init) {
                (Some(p0), false) => parse_vector(&p0)?,
                (None, true) => replicator_momentum(&f, &y0)?,
                (None, false) => {
                    return Err(Error::Argument(
                        "provide an initial momentum via --p0 or pass --replicator-init".into(),
                    ))
                }
                (Some(_), true) => unreachable!("clap rejects --p0 with --replicator-init"),
            };
            let traj = integrate_hamiltonian(&f, &y0, &p0, dt, t_end)?;
            write_file(&out, &traj.to_csv())?;
            eprintln!(
                "wrote {} ({} states, energy drift {:e})",
                out.display(),
                traj.len(),
                traj.energy_drift()
            );
            Ok(0)
        }
        Command::Periodic {
            payoff,
            c,
            dt,
            t_max,
            out,
        } => {
            let a = load_matrix(&payoff)?;
            let report = detect_periodic_orbit(&a, c, dt, t_max)?;
            write_json(&out, &report)?;
            match report.verdict {
                OrbitVerdict::Periodic => eprintln!(
                    "wrote {} (periodic orbit, period estimate {:?})",
                    out.display(),
                    report.period_estimate
                ),
                OrbitVerdict::NotDetected => {
                    eprintln!("wrote {} (no periodic orbit detected)", out.display())
                }
            }
            Ok(0)
        }
        Command::Controllability {
            a,
            b,
            samples,
            seed,
            out,
        } => {
            let a = parse_vector(&a)?;
            let b = if b == "id" {
                DMatrix::identity(a.len(), a.len())
            } else {
                load_matrix(Path::new(&b))?
            };
            let report = controllability_verdict(&a, &b, samples, seed)?;
            write_file(&out, &(report.to_json() + "\n"))?;
            match report.verdict {
                ControllabilityVerdict::Controllable => {
                    eprintln!("wrote {} (controllable)", out.display());
                    Ok(0)
                }
                ControllabilityVerdict::Undetermined => {
                    eprintln!(
                        "controllability undetermined: a sampled point failed to span \
                         (report at {})",
                        out.display()
                    );
                    Ok(3)
                }
                ControllabilityVerdict::Withheld => {
                    eprintln!(
                        "controllability verdict withheld: {} (report at {})",
                        report.hypotheses.failures.join("; "),
                        out.display()
                    );
                    Ok(3)
                }
            }
        }
        Command::ElCheck { model, traj, out } => {
            let f = load_model(&model)?;
            let csv = read_file(&traj)?;
            let trajectory = Trajectory::from_csv(&csv)?;
            let residual = euler_lagrange_residual(&f, &trajectory)?;
            let times = trajectory.times();
            let payload = serde_json::json!({
                "euler_lagrange_residual": residual,
                "num_states": trajectory.len(),
                "t_start": times.first().copied().unwrap_or(0.0),
                "t_end": times.last().copied().unwrap_or(0.0),
            });
            write_json(&out, &payload)?;
            eprintln!("wrote {} (residual {:e})", out.display(), residual);
            Ok(0)
        }
    }
}

/// Parses a comma-separated list of floats.
fn parse_vector(s: &str) -> Result<DVector<f64>> {
    let values = s
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Argument(format!("cannot parse {tok:?} as a number in {s:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::Argument("expected a nonempty vector".into()));
    }
    Ok(DVector::from_vec(values))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| Error::Argument(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Argument(format!("cannot serialize report: {e}")))?;
    write_file(path, &(body + "\n"))
}

/// Loads a fitness model from its JSON schema file.
fn load_model(path: &Path) -> Result<FitnessModel> {
    FitnessModel::from_json(&read_file(path)?)
        .map_err(|e| Error::Argument(format!("invalid model {}: {e}", path.display())))
}

/// Loads a square matrix stored as a row-major JSON array of arrays.
fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(&read_file(path)?)
        .map_err(|e| Error::Argument(format!("invalid matrix {}: {e}", path.display())))?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Argument(format!(
            "matrix {} must be square and nonempty",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
