//! Fixed-step integration of replicator flows and the flow-side bracket
//! oracle.
//!
//! `integrate_replicator` advances `xdot = fhat(x)` with classical RK4 or the
//! implicit midpoint rule, renormalizing and clamping after every step so
//! floating-point drift cannot reach the boundary singularities of the
//! metric. `jacobi_lie_bracket_fd` computes the Jacobi–Lie bracket of two
//! simplex vector fields purely by finite differences — deliberately
//! independent of the algebraic bracket — and `homomorphism_residual`
//! measures how far `[fhat, ghat]` is from the hat of `{f, g}`, which is the
//! flow-side certificate that the hat map is a Lie-algebra homomorphism.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fitness::{r_bracket, FitnessModel, H_FD};
use crate::simplex::{project_tangent, SimplexPoint, TangentVector, INTERIOR_EPS};

/// Negative coordinates no larger than this are clamped to zero after each
/// integration step; anything worse aborts the integration.
pub const CLAMP_TOL: f64 = 1e-8;

/// Allowed drift of a stored trajectory state's coordinate sum from 1.
pub const TRAJECTORY_SUM_TOL: f64 = 1e-9;

/// Convergence threshold for implicit fixed-point iterations.
pub const FIXED_POINT_TOL: f64 = 1e-13;

/// Iteration cap for implicit fixed-point solves.
pub const FIXED_POINT_MAX_ITERS: usize = 50;

/// Fixed-step integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Implicit midpoint rule (symmetric, second order), solved by fixed-point
    /// iteration to [`FIXED_POINT_TOL`].
    Midpoint,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Midpoint => "midpoint",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "midpoint" => Ok(Method::Midpoint),
            other => Err(Error::Argument(format!(
                "unknown integration method {other:?}, expected \"rk4\" or \"midpoint\""
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A time-stamped sequence of simplex states from a fixed-step integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SimplexPoint>,
    method: Option<Method>,
    dt: f64,
}

impl Trajectory {
    /// Builds a trajectory from matching time and state sequences.
    ///
    /// Times must be finite and strictly increasing; states must sum to 1
    /// within [`TRAJECTORY_SUM_TOL`] (already guaranteed by construction of
    /// `SimplexPoint`). The step size is inferred from the first two times.
    pub fn new(times: Vec<f64>, states: Vec<SimplexPoint>, method: Option<Method>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Argument(format!(
                "trajectory has {} times but {} states",
                times.len(),
                states.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::Argument("trajectory must not be empty".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Argument("trajectory times must be finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        let n = states[0].dim();
        if states.iter().any(|s| s.dim() != n) {
            return Err(Error::Argument(
                "trajectory states must share one dimension".into(),
            ));
        }
        let dt = if times.len() >= 2 { times[1] - times[0] } else { 0.0 };
        Ok(Self {
            times,
            states,
            method,
            dt,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SimplexPoint] {
        &self.states
    }

    pub fn method(&self) -> Option<Method> {
        self.method
    }

    /// Step size inferred from the first two sample times (0 for a single
    /// sample).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &SimplexPoint {
        self.states.last().expect("trajectory is never empty")
    }

    /// Serializes as CSV with header `t,x1,...,xn`, every value printed with
    /// 17 significant digits so parsing reproduces the exact doubles.
    pub fn to_csv(&self) -> String {
        let n = self.states[0].dim();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:.16e}"));
            for c in x.coords().iter() {
                out.push_str(&format!(",{c:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form produced by [`Trajectory::to_csv`].
    ///
    /// States written by this library re-parse bit-identically. Foreign files
    /// are accepted when each row sums to 1 within [`TRAJECTORY_SUM_TOL`] with
    /// coordinates no more negative than [`CLAMP_TOL`]; coordinates are kept
    /// exactly as written.
    pub fn from_csv(s: &str) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Argument("empty trajectory CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 3 || cols[0] != "t" {
            return Err(Error::Argument(format!(
                "trajectory CSV header must be t,x1,...,xn, got {header:?}"
            )));
        }
        let n = cols.len() - 1;
        for (i, c) in cols[1..].iter().enumerate() {
            let expected = format!("x{}", i + 1);
            if *c != expected {
                return Err(Error::Argument(format!(
                    "trajectory CSV header column {} is {c:?}, expected {expected:?}",
                    i + 1
                )));
            }
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n + 1 {
                return Err(Error::Argument(format!(
                    "trajectory CSV row {row} has {} fields, expected {}",
                    fields.len(),
                    n + 1
                )));
            }
            let mut values = Vec::with_capacity(n + 1);
            for f in &fields {
                values.push(f.trim().parse::<f64>().map_err(|_| {
                    Error::Argument(format!("trajectory CSV row {row}: bad number {f:?}"))
                })?);
            }
            times.push(values[0]);
            let x = DVector::from_row_slice(&values[1..]);
            states.push(
                SimplexPoint::from_raw_checked(x, TRAJECTORY_SUM_TOL, CLAMP_TOL)
                    .map_err(|e| Error::Argument(format!("trajectory CSV row {row}: {e}")))?,
            );
        }
        Self::new(times, states, None)
    }
}

/// One accepted integration step: clamp tiny negatives to zero, renormalize,
/// and reject anything that genuinely left the simplex.
fn accept_step(mut z: DVector<f64>, step: usize) -> Result<(DVector<f64>, SimplexPoint)> {
    for i in 0..z.len() {
        let c = z[i];
        if !c.is_finite() {
            return Err(Error::Integration {
                step,
                message: format!("coordinate {i} became non-finite"),
            });
        }
        if c < -CLAMP_TOL {
            return Err(Error::Integration {
                step,
                message: format!("coordinate {i} = {c} left the simplex by more than {CLAMP_TOL:e}"),
            });
        }
        if c < 0.0 {
            z[i] = 0.0;
        }
    }
    let s: f64 = z.sum();
    if !s.is_finite() || s <= 0.5 {
        return Err(Error::Integration {
            step,
            message: format!("state sum degenerated to {s}"),
        });
    }
    z /= s;
    let point = SimplexPoint::new(z.clone()).map_err(|e| Error::Integration {
        step,
        message: format!("renormalized state rejected: {e}"),
    })?;
    Ok((z, point))
}

/// Integrates the replicator flow `xdot = fhat(x)` with a fixed step.
///
/// Takes `round(t_end / dt)` steps (at least one), so the final time is
/// within `dt` of `t_end`. Every accepted state is renormalized; negative
/// coordinates within [`CLAMP_TOL`] are clamped to zero and larger
/// excursions abort with an integration error carrying the step index.
pub fn integrate_replicator(
    f: &FitnessModel,
    x0: &SimplexPoint,
    dt: f64,
    t_end: f64,
    method: Method,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!("step size must be positive, got {dt}")));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::Argument(format!(
            "end time must be at least one step (dt = {dt}), got {t_end}"
        )));
    }
    if f.dim() != x0.dim() {
        return Err(Error::Argument(format!(
            "fitness dimension {} does not match state dimension {}",
            f.dim(),
            x0.dim()
        )));
    }
    let steps = ((t_end / dt).round() as usize).max(1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut z = x0.coords().clone();
    times.push(0.0);
    states.push(x0.clone());

    let rhs = |w: &DVector<f64>, step: usize| -> Result<DVector<f64>> {
        f.hat_at(w).map_err(|e| Error::Integration {
            step,
            message: format!("vector field evaluation failed: {e}"),
        })
    };

    for step in 1..=steps {
        match method {
            Method::Rk4 => {
                let k1 = rhs(&z, step)?;
                let k2 = rhs(&(&z + &k1 * (dt / 2.0)), step)?;
                let k3 = rhs(&(&z + &k2 * (dt / 2.0)), step)?;
                let k4 = rhs(&(&z + &k3 * dt), step)?;
                z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            }
            Method::Midpoint => {
                let mut w = &z + &(rhs(&z, step)? * dt);
                let mut converged = false;
                for _ in 0..FIXED_POINT_MAX_ITERS {
                    let mid = (&z + &w) * 0.5;
                    let next = &z + &(rhs(&mid, step)? * dt);
                    let delta = (&next - &w).amax();
                    w = next;
                    if delta <= FIXED_POINT_TOL {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(Error::Integration {
                        step,
                        message: format!(
                            "implicit midpoint iteration did not reach {FIXED_POINT_TOL:e} in {FIXED_POINT_MAX_ITERS} iterations"
                        ),
                    });
                }
                z = w;
            }
        }
        let (renormalized, point) = accept_step(z, step)?;
        z = renormalized;
        times.push(step as f64 * dt);
        states.push(point);
    }
    Trajectory::new(times, states, Some(method))
}

type FieldFn = dyn Fn(&SimplexPoint) -> Result<TangentVector> + Send + Sync;

/// A tangent vector field on the simplex.
///
/// The `TangentVector` return type enforces the zero-sum invariant at every
/// query.
#[derive(Clone)]
pub struct SimplexField {
    dim: usize,
    eval: Arc<FieldFn>,
}

impl SimplexField {
    pub fn new<F>(dim: usize, eval: F) -> Result<Self>
    where
        F: Fn(&SimplexPoint) -> Result<TangentVector> + Send + Sync + 'static,
    {
        if dim < 2 {
            return Err(Error::Argument(format!(
                "a simplex field needs dimension >= 2, got {dim}"
            )));
        }
        Ok(Self {
            dim,
            eval: Arc::new(eval),
        })
    }

    /// The replicator field `x -> fhat(x)` of a fitness map.
    pub fn from_fitness(f: &FitnessModel) -> Self {
        let g = f.clone();
        Self {
            dim: f.dim(),
            eval: Arc::new(move |x: &SimplexPoint| g.hat(x)),
        }
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, move |x: &SimplexPoint| Ok(TangentVector::zero(x.dim())))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &SimplexPoint) -> Result<TangentVector> {
        if x.dim() != self.dim {
            return Err(Error::Argument(format!(
                "field has dimension {}, point has {}",
                self.dim,
                x.dim()
            )));
        }
        let v = (self.eval)(x)?;
        if v.dim() != self.dim {
            return Err(Error::Argument(format!(
                "field closure returned dimension {}, expected {}",
                v.dim(),
                self.dim
            )));
        }
        Ok(v)
    }
}

/// Recovers a fitness map whose replicator field is the given tangent field:
/// `f_i(x) = phi_i(x) / x_i` on the interior.
///
/// The recovered map has mean fitness 0 everywhere (the components of a
/// tangent vector sum to zero), and its hat map reproduces `phi` exactly up
/// to rounding. Off-simplex probe coordinates are normalized radially before
/// querying the field, so finite-difference Jacobians remain available.
pub fn fitness_from_field(phi: &SimplexField) -> Result<FitnessModel> {
    let p = phi.clone();
    FitnessModel::custom(phi.dim(), move |z: &DVector<f64>| {
        let s: f64 = z.sum();
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::Domain(format!(
                "cannot normalize ambient point with coordinate sum {s}"
            )));
        }
        let w = z / s;
        if w.iter().any(|&c| c < INTERIOR_EPS) {
            return Err(Error::Domain(
                "fitness recovered from a field is defined on the interior only".into(),
            ));
        }
        let x = SimplexPoint::new(w.clone())
            .map_err(|e| Error::Domain(format!("probe point rejected: {e}")))?;
        let v = p.eval(&x)?;
        Ok(v.coords().component_div(&w))
    })
}

/// Jacobi–Lie bracket `[X, Y](x) = (dY/dx) X - (dX/dx) Y` by central
/// finite differences along the field directions.
///
/// This is the flow-side oracle: it never calls the algebraic bracket. The
/// difference quotient is taken at `x ± h v`, which stays on the affine hull
/// because `v` is tangent; the result is projected back to the tangent
/// space.
pub fn jacobi_lie_bracket_fd(
    x_field: &SimplexField,
    y_field: &SimplexField,
    x: &SimplexPoint,
    h: Option<f64>,
) -> Result<TangentVector> {
    if x_field.dim() != y_field.dim() {
        return Err(Error::Argument(format!(
            "fields have different dimensions {} and {}",
            x_field.dim(),
            y_field.dim()
        )));
    }
    if x.dim() != x_field.dim() {
        return Err(Error::Argument(format!(
            "point dimension {} does not match field dimension {}",
            x.dim(),
            x_field.dim()
        )));
    }
    let h = h.unwrap_or(H_FD);
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Argument(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    x.require_interior("the Jacobi-Lie bracket")?;
    let xv = x_field.eval(x)?.into_coords();
    let yv = y_field.eval(x)?.into_coords();
    let dy_along_x = directional_derivative(y_field, x, &xv, h)?;
    let dx_along_y = directional_derivative(x_field, x, &yv, h)?;
    Ok(project_tangent(&(dy_along_x - dx_along_y)))
}

/// `(F(x + h v) - F(x - h v)) / (2 h)` for a tangent direction `v`.
fn directional_derivative(
    field: &SimplexField,
    x: &SimplexPoint,
    v: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let probe = |sign: f64| -> Result<TangentVector> {
        let z = x.coords() + v * (sign * h);
        let p = SimplexPoint::new(z).map_err(|e| {
            Error::Domain(format!("finite-difference probe left the simplex: {e}"))
        })?;
        field.eval(&p)
    };
    let plus = probe(1.0)?;
    let minus = probe(-1.0)?;
    Ok((plus.into_coords() - minus.into_coords()) / (2.0 * h))
}

/// Worst-case gap between the flow-side bracket of the replicator fields and
/// the hat of the algebraic bracket:
/// `max_x || [fhat, ghat](x) - hat({f, g}, x) ||_inf`.
pub fn homomorphism_residual(
    f: &FitnessModel,
    g: &FitnessModel,
    samples: &[SimplexPoint],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument(
            "homomorphism residual needs at least one sample".into(),
        ));
    }
    let bracket = r_bracket(f, g)?;
    let xf = SimplexField::from_fitness(f);
    let xg = SimplexField::from_fitness(g);
    let mut worst = 0.0f64;
    for x in samples {
        let lie = jacobi_lie_bracket_fd(&xf, &xg, x, None)?;
        let alg = bracket.hat(x)?;
        worst = worst.max((lie.coords() - alg.coords()).amax());
    }
    Ok(worst)
}
