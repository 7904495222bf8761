//! The variational and Hamiltonian structure of replicator flows.
//!
//! Replicator solutions extremize the Svirezhev action, whose integrand is
//! the FRS speed squared plus the squared FRS norm of the replicator field.
//! This module evaluates that Lagrangian and its Euler–Lagrange residual
//! along discrete trajectories, performs the Legendre transform to the
//! chart-coordinate Hamiltonian
//!
//! ```text
//! H(y, p) = p^T Ginv(y) p / 4 - sum_i x_i (f_i(x) - fbar(x))^2,   x = lift(y),
//! ```
//!
//! integrates Hamilton's equations with the implicit midpoint rule (with an
//! explicit-Euler variant kept as a negative control for the reversibility
//! certificate), and detects periodic orbits of two-strategy games from the
//! turning-point structure of the potential: the level condition `V(y) = c`
//! is a quartic in `y`, and two distinct interior roots bound a closed orbit
//! crossing the symmetry section `{p = 0}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{Trajectory, FIXED_POINT_MAX_ITERS, FIXED_POINT_TOL};
use crate::error::{Error, Result};
use crate::fitness::{FitnessModel, H_FD};
use crate::simplex::{
    frs_inner, frs_local_metric, frs_local_metric_inverse, LocalChart, SimplexPoint,
    TangentVector,
};

/// A detected orbit must close in phase space within this distance.
pub const RETURN_TOL: f64 = 1e-3;

/// Roots of the level quartic closer than this are reported once.
pub const ROOT_DEDUP_TOL: f64 = 1e-10;

/// Bisection polish narrows each root bracket to this width.
pub const ROOT_POLISH_TOL: f64 = 1e-12;

/// Default step size for orbit detection.
pub const DEFAULT_ORBIT_DT: f64 = 1e-4;

/// Default integration horizon for orbit detection.
pub const DEFAULT_ORBIT_T_MAX: f64 = 50.0;

/// Phase-space integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMethod {
    /// Implicit midpoint: symmetric and symplectic; the production scheme.
    ImplicitMidpoint,
    /// Explicit Euler: neither symmetric nor symplectic; kept as a negative
    /// control for energy-drift and reversibility certificates.
    ExplicitEuler,
}

/// A fixed-step numerical solution of Hamilton's equations in chart
/// coordinates: `n-1` positions, `n-1` momenta, and the recorded energy.
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    times: Vec<f64>,
    ys: Vec<DVector<f64>>,
    ps: Vec<DVector<f64>>,
    hs: Vec<f64>,
    method: PhaseMethod,
    dt: f64,
}

impl PhaseTrajectory {
    fn assemble(
        times: Vec<f64>,
        ys: Vec<DVector<f64>>,
        ps: Vec<DVector<f64>>,
        hs: Vec<f64>,
        method: PhaseMethod,
    ) -> Result<Self> {
        if times.is_empty()
            || times.len() != ys.len()
            || times.len() != ps.len()
            || times.len() != hs.len()
        {
            return Err(Error::Argument(
                "phase trajectory needs equal, nonempty time/position/momentum/energy sequences"
                    .into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument(
                "phase trajectory times must be strictly increasing".into(),
            ));
        }
        let m = ys[0].len();
        if ys.iter().any(|y| y.len() != m) || ps.iter().any(|p| p.len() != m) {
            return Err(Error::Argument(
                "phase trajectory coordinates must share one dimension".into(),
            ));
        }
        let dt = if times.len() >= 2 { times[1] - times[0] } else { 0.0 };
        Ok(Self {
            times,
            ys,
            ps,
            hs,
            method,
            dt,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn ys(&self) -> &[DVector<f64>] {
        &self.ys
    }

    pub fn ps(&self) -> &[DVector<f64>] {
        &self.ps
    }

    /// Recorded Hamiltonian values, one per sample.
    pub fn hs(&self) -> &[f64] {
        &self.hs
    }

    pub fn method(&self) -> PhaseMethod {
        self.method
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest deviation of the recorded energy from its initial value.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.hs[0];
        self.hs.iter().fold(0.0f64, |m, h| m.max((h - h0).abs()))
    }

    /// Serializes as CSV with header `t,y1,...,y{n-1},p1,...,p{n-1},H`,
    /// every value printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let m = self.ys[0].len();
        let mut out = String::from("t");
        for i in 1..=m {
            out.push_str(&format!(",y{i}"));
        }
        for i in 1..=m {
            out.push_str(&format!(",p{i}"));
        }
        out.push_str(",H\n");
        for k in 0..self.times.len() {
            out.push_str(&format!("{:.16e}", self.times[k]));
            for c in self.ys[k].iter() {
                out.push_str(&format!(",{c:.16e}"));
            }
            for c in self.ps[k].iter() {
                out.push_str(&format!(",{c:.16e}"));
            }
            out.push_str(&format!(",{:.16e}\n", self.hs[k]));
        }
        out
    }
}

/// Svirezhev Lagrangian `L(x, v) = <v, v>_FRS + <fhat, fhat>_FRS` at an
/// interior state.
pub fn svirezhev_lagrangian(
    f: &FitnessModel,
    x: &SimplexPoint,
    v: &TangentVector,
) -> Result<f64> {
    let hat = f.hat(x)?;
    Ok(frs_inner(x, v, v)? + frs_inner(x, &hat, &hat)?)
}

/// Trapezoidal quadrature of the Svirezhev Lagrangian along a trajectory,
/// with velocities from central differences of the stored states (one-sided
/// at the ends).
pub fn action_cost(f: &FitnessModel, traj: &Trajectory) -> Result<f64> {
    let states = traj.states();
    let times = traj.times();
    if states.len() < 2 {
        return Err(Error::Argument(
            "action quadrature needs at least two states".into(),
        ));
    }
    let last = states.len() - 1;
    let velocity = |k: usize| -> Result<TangentVector> {
        let (lo, hi) = if k == 0 {
            (0, 1)
        } else if k == last {
            (last - 1, last)
        } else {
            (k - 1, k + 1)
        };
        let span = times[hi] - times[lo];
        let v = (states[hi].coords() - states[lo].coords()) / span;
        TangentVector::new(v)
    };
    let mut lagrangians = Vec::with_capacity(states.len());
    for k in 0..states.len() {
        lagrangians.push(svirezhev_lagrangian(f, &states[k], &velocity(k)?)?);
    }
    let mut cost = 0.0;
    for k in 0..last {
        cost += (times[k + 1] - times[k]) * (lagrangians[k] + lagrangians[k + 1]) / 2.0;
    }
    Ok(cost)
}

/// Worst componentwise defect of the Euler–Lagrange equations along a
/// uniformly sampled interior trajectory.
///
/// With `phi = f - fbar e`, velocities `xd` and accelerations `xdd` from
/// central differences, and the multiplier
/// `lambda = -2 sum_k x_k phi_k^2`, the residual at each interior sample is
///
/// ```text
/// max_i | 2 xdd_i - ( xd_i^2 / x_i + x_i phi_i^2
///                     + 2 x_i [ (J fhat)_i - x^T J fhat ] + x_i lambda ) |
/// ```
///
/// where `J` is the fitness Jacobian. Along exact replicator solutions the
/// defect is `O(dt^2)` from the difference quotients.
pub fn euler_lagrange_residual(f: &FitnessModel, traj: &Trajectory) -> Result<f64> {
    let states = traj.states();
    let times = traj.times();
    if states.len() < 3 {
        return Err(Error::Argument(
            "Euler-Lagrange residual needs at least three states".into(),
        ));
    }
    let n = states[0].dim();
    if f.dim() != n {
        return Err(Error::Argument(format!(
            "fitness dimension {} does not match trajectory dimension {n}",
            f.dim()
        )));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-7 * dt)
    {
        return Err(Error::Argument(
            "Euler-Lagrange residual needs uniformly spaced samples".into(),
        ));
    }
    let mut worst = 0.0f64;
    for k in 1..states.len() - 1 {
        let x = &states[k];
        x.require_interior("the Euler-Lagrange residual")?;
        let z = x.coords();
        let xd = (states[k + 1].coords() - states[k - 1].coords()) / (2.0 * dt);
        let xdd = (states[k + 1].coords() - z * 2.0 + states[k - 1].coords()) / (dt * dt);

        let fv = f.evaluate(x)?;
        let jac = f.jacobian(x)?;
        let fbar = z.dot(&fv);
        let phi = fv.add_scalar(-fbar);
        let fhat = z.component_mul(&phi);
        let jfhat = &jac * &fhat;
        let mean_jfhat = z.dot(&jfhat);
        let lambda = -2.0 * z.dot(&phi.component_mul(&phi));
        for i in 0..n {
            let rhs = xd[i] * xd[i] / z[i]
                + z[i] * phi[i] * phi[i]
                + 2.0 * z[i] * (jfhat[i] - mean_jfhat)
                + z[i] * lambda;
            worst = worst.max((2.0 * xdd[i] - rhs).abs());
        }
    }
    Ok(worst)
}

/// Legendre transform to the costate: `p = 2 G(y) ydot` with the local FRS
/// metric `G`.
pub fn legendre_momentum(y: &DVector<f64>, ydot: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() != ydot.len() {
        return Err(Error::Argument(format!(
            "position has dimension {}, velocity has {}",
            y.len(),
            ydot.len()
        )));
    }
    Ok(frs_local_metric(y)? * ydot * 2.0)
}

/// Chart velocity back from the costate: `ydot = Ginv(y) p / 2`.
pub fn chart_velocity(y: &DVector<f64>, p: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() != p.len() {
        return Err(Error::Argument(format!(
            "position has dimension {}, momentum has {}",
            y.len(),
            p.len()
        )));
    }
    Ok(frs_local_metric_inverse(y)? * p * 0.5)
}

fn check_phase_dims(f: &FitnessModel, y: &DVector<f64>, p: &DVector<f64>) -> Result<usize> {
    let n = f.dim();
    if y.len() != n - 1 || p.len() != n - 1 {
        return Err(Error::Argument(format!(
            "fitness of dimension {n} needs chart vectors of length {}, got y: {}, p: {}",
            n - 1,
            y.len(),
            p.len()
        )));
    }
    if p.iter().chain(y.iter()).any(|c| !c.is_finite()) {
        return Err(Error::Argument(
            "phase-space coordinates must be finite".into(),
        ));
    }
    Ok(n)
}

/// Potential energy `V(y) = -sum_i x_i (f_i - fbar)^2` at `x = lift(y)`;
/// the negated squared FRS norm of the replicator field.
fn potential(f: &FitnessModel, chart: &LocalChart, y: &DVector<f64>) -> Result<f64> {
    let x = chart.lift(y)?;
    x.require_interior("the potential energy")?;
    let fv = f.evaluate(&x)?;
    let fbar = x.coords().dot(&fv);
    let mut v = 0.0;
    for i in 0..x.dim() {
        let d = fv[i] - fbar;
        v -= x[i] * d * d;
    }
    Ok(v)
}

/// Total energy `H = T + V` with kinetic part `T = p^T Ginv(y) p / 4`.
pub fn hamiltonian(f: &FitnessModel, y: &DVector<f64>, p: &DVector<f64>) -> Result<f64> {
    let n = check_phase_dims(f, y, p)?;
    let chart = LocalChart::new(n)?;
    let ginv = frs_local_metric_inverse(y)?;
    let t = p.dot(&(&ginv * p)) / 4.0;
    Ok(t + potential(f, &chart, y)?)
}

/// Closed-form momentum derivative for two-strategy constant or matrix-game
/// fitness, where `f_1 - f_2 = a y + b`:
/// `pdot = -p^2 (1 - 2y) / 4 + (1 - 2y)(a y + b)^2 + 2 a y (1 - y)(a y + b)`.
fn pdot_closed_form_n2(f: &FitnessModel, y: f64, p: f64) -> Option<f64> {
    let (a, b) = if let Some(m) = f.linear_matrix() {
        if m.nrows() != 2 {
            return None;
        }
        (
            m[(0, 0)] - m[(0, 1)] - m[(1, 0)] + m[(1, 1)],
            m[(0, 1)] - m[(1, 1)],
        )
    } else if let Some(v) = f.constant_vector() {
        if v.len() != 2 {
            return None;
        }
        (0.0, v[0] - v[1])
    } else {
        return None;
    };
    let gap = a * y + b;
    Some(-p * p * (1.0 - 2.0 * y) / 4.0 + (1.0 - 2.0 * y) * gap * gap
        + 2.0 * a * y * (1.0 - y) * gap)
}

/// Hamilton's equations: `ydot = Ginv(y) p / 2`, `pdot = -dH/dy`.
///
/// The momentum derivative uses the two-strategy closed form when the
/// fitness is constant or a matrix game; otherwise central differences of
/// `H` in `y` with step [`H_FD`].
pub fn hamiltonian_rhs(
    f: &FitnessModel,
    y: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = check_phase_dims(f, y, p)?;
    let ydot = chart_velocity(y, p)?;
    if n == 2 {
        if let Some(pd) = pdot_closed_form_n2(f, y[0], p[0]) {
            return Ok((ydot, DVector::from_element(1, pd)));
        }
    }
    let m = n - 1;
    let mut pdot = DVector::zeros(m);
    let mut yp = y.clone();
    let mut ym = y.clone();
    for i in 0..m {
        yp[i] = y[i] + H_FD;
        ym[i] = y[i] - H_FD;
        pdot[i] = -(hamiltonian(f, &yp, p)? - hamiltonian(f, &ym, p)?) / (2.0 * H_FD);
        yp[i] = y[i];
        ym[i] = y[i];
    }
    Ok((ydot, pdot))
}

/// Costate that makes the Hamiltonian flow shadow the replicator flow:
/// `p = 2 G(y) ydot` with `ydot` the chart velocity of the replicator field
/// at `lift(y)`.
pub fn replicator_momentum(f: &FitnessModel, y: &DVector<f64>) -> Result<DVector<f64>> {
    let n = f.dim();
    if y.len() != n - 1 {
        return Err(Error::Argument(format!(
            "fitness of dimension {n} needs chart coordinates of length {}, got {}",
            n - 1,
            y.len()
        )));
    }
    let chart = LocalChart::new(n)?;
    let x = chart.lift(y)?;
    x.require_interior("the replicator costate")?;
    let hat = f.hat(&x)?;
    let ydot = chart.project_vector(&hat)?;
    legendre_momentum(y, &ydot)
}

fn wrap_step_error(step: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        already @ Error::Integration { .. } => already,
        other => Error::Integration {
            step,
            message: other.to_string(),
        },
    }
}

fn midpoint_phase_step(
    f: &FitnessModel,
    y: &DVector<f64>,
    p: &DVector<f64>,
    dt: f64,
    step: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let wrap = wrap_step_error(step);
    let (yd, pd) = hamiltonian_rhs(f, y, p).map_err(&wrap)?;
    let mut wy = y + &yd * dt;
    let mut wp = p + &pd * dt;
    for _ in 0..FIXED_POINT_MAX_ITERS {
        let my = (y + &wy) * 0.5;
        let mp = (p + &wp) * 0.5;
        let (myd, mpd) = hamiltonian_rhs(f, &my, &mp).map_err(&wrap)?;
        let ny = y + &myd * dt;
        let np = p + &mpd * dt;
        let delta = (&ny - &wy).amax().max((&np - &wp).amax());
        wy = ny;
        wp = np;
        if delta <= FIXED_POINT_TOL {
            return Ok((wy, wp));
        }
    }
    Err(Error::Integration {
        step,
        message: format!(
            "implicit midpoint iteration did not reach {FIXED_POINT_TOL:e} in {FIXED_POINT_MAX_ITERS} iterations"
        ),
    })
}

fn euler_phase_step(
    f: &FitnessModel,
    y: &DVector<f64>,
    p: &DVector<f64>,
    dt: f64,
    step: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (yd, pd) = hamiltonian_rhs(f, y, p).map_err(wrap_step_error(step))?;
    Ok((y + &yd * dt, p + &pd * dt))
}

fn integrate_phase(
    f: &FitnessModel,
    y0: &DVector<f64>,
    p0: &DVector<f64>,
    dt: f64,
    t_end: f64,
    method: PhaseMethod,
) -> Result<PhaseTrajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!("step size must be positive, got {dt}")));
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::Argument(format!(
            "end time must be at least one step (dt = {dt}), got {t_end}"
        )));
    }
    let h0 = hamiltonian(f, y0, p0)?;
    let steps = ((t_end / dt).round() as usize).max(1);
    let mut times = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut ps = Vec::with_capacity(steps + 1);
    let mut hs = Vec::with_capacity(steps + 1);
    times.push(0.0);
    ys.push(y0.clone());
    ps.push(p0.clone());
    hs.push(h0);
    let mut y = y0.clone();
    let mut p = p0.clone();
    for step in 1..=steps {
        let (ny, np) = match method {
            PhaseMethod::ImplicitMidpoint => midpoint_phase_step(f, &y, &p, dt, step)?,
            PhaseMethod::ExplicitEuler => euler_phase_step(f, &y, &p, dt, step)?,
        };
        y = ny;
        p = np;
        let h = hamiltonian(f, &y, &p).map_err(wrap_step_error(step))?;
        times.push(step as f64 * dt);
        ys.push(y.clone());
        ps.push(p.clone());
        hs.push(h);
    }
    PhaseTrajectory::assemble(times, ys, ps, hs, method)
}

/// Integrates Hamilton's equations with the implicit midpoint rule,
/// recording the energy at every step.
///
/// Each step solves the midpoint fixed point to [`FIXED_POINT_TOL`] within
/// [`FIXED_POINT_MAX_ITERS`] iterations; non-convergence or a boundary exit
/// aborts with an integration error carrying the step index.
pub fn integrate_hamiltonian(
    f: &FitnessModel,
    y0: &DVector<f64>,
    p0: &DVector<f64>,
    dt: f64,
    t_end: f64,
) -> Result<PhaseTrajectory> {
    integrate_phase(f, y0, p0, dt, t_end, PhaseMethod::ImplicitMidpoint)
}

/// Explicit-Euler phase integration — a deliberately non-symplectic
/// negative control for drift and reversibility certificates.
pub fn integrate_hamiltonian_explicit_euler(
    f: &FitnessModel,
    y0: &DVector<f64>,
    p0: &DVector<f64>,
    dt: f64,
    t_end: f64,
) -> Result<PhaseTrajectory> {
    integrate_phase(f, y0, p0, dt, t_end, PhaseMethod::ExplicitEuler)
}

/// Reversibility defect of the discrete flow under `F(y, p) = (y, -p)`.
///
/// Starting from the trajectory's final state with flipped momentum, the
/// same scheme and step are run for the same duration; the defect is the
/// sup-norm distance of `F(result)` from the trajectory's initial state. It
/// vanishes (to roundoff plus fixed-point tolerance) for the implicit
/// midpoint rule and is macroscopic for explicit Euler.
pub fn reverser_residual(f: &FitnessModel, traj: &PhaseTrajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::Argument(
            "reversibility defect needs at least two samples".into(),
        ));
    }
    let t_span = traj.times[traj.len() - 1] - traj.times[0];
    let y_end = &traj.ys[traj.len() - 1];
    let p_end = &traj.ps[traj.len() - 1];
    let back = integrate_phase(f, y_end, &(-p_end), traj.dt, t_span, traj.method)?;
    let y_back = &back.ys[back.len() - 1];
    let p_back = &back.ps[back.len() - 1];
    let dy = (y_back - &traj.ys[0]).amax();
    let dp = (-p_back - &traj.ps[0]).amax();
    Ok(dy.max(dp))
}

/// Payoff-gap coefficients of a 2x2 game: `f_1 - f_2 = a y + b` with
/// `a = A11 - A12 - A21 + A22` and `b = A12 - A22`.
pub fn pd_coefficients(payoff: &DMatrix<f64>) -> Result<(f64, f64)> {
    if payoff.nrows() != 2 || payoff.ncols() != 2 {
        return Err(Error::Argument(format!(
            "turning-point analysis needs a 2x2 payoff matrix, got {}x{}",
            payoff.nrows(),
            payoff.ncols()
        )));
    }
    if payoff.iter().any(|c| !c.is_finite()) {
        return Err(Error::Argument("payoff matrix has non-finite entries".into()));
    }
    Ok((
        payoff[(0, 0)] - payoff[(0, 1)] - payoff[(1, 0)] + payoff[(1, 1)],
        payoff[(0, 1)] - payoff[(1, 1)],
    ))
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Real roots in the open interval `(0, 1)` of the level condition
/// `V(y) = c` for a 2x2 game, i.e. of the quartic
/// `-a^2 y^4 + (a^2 - 2ab) y^3 + (2ab - b^2) y^2 + b^2 y + c = 0`.
///
/// Roots come from the companion-matrix eigenvalues, are polished by
/// bisection to [`ROOT_POLISH_TOL`], deduplicated at [`ROOT_DEDUP_TOL`], and
/// returned in ascending order.
pub fn pd_quartic_roots(payoff: &DMatrix<f64>, c: f64) -> Result<Vec<f64>> {
    if !c.is_finite() {
        return Err(Error::Argument(format!("energy level must be finite, got {c}")));
    }
    let (a, b) = pd_coefficients(payoff)?;
    let coeffs = [
        -a * a,
        a * a - 2.0 * a * b,
        2.0 * a * b - b * b,
        b * b,
        c,
    ];
    // Strip exactly vanishing leading coefficients (degenerate games).
    let lead = coeffs.iter().position(|&v| v != 0.0).unwrap_or(coeffs.len());
    let poly = &coeffs[lead..];
    if poly.len() <= 1 {
        return Ok(Vec::new());
    }
    let deg = poly.len() - 1;
    let mut companion = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -poly[deg - i] / poly[0];
    }
    let eigen = companion.complex_eigenvalues();

    let mut roots: Vec<f64> = Vec::new();
    for ev in eigen.iter() {
        if ev.im.abs() > 1e-8 * (1.0 + ev.re.abs()) {
            continue;
        }
        let r = ev.re;
        if r <= 1e-9 || r >= 1.0 - 1e-9 {
            continue;
        }
        roots.push(polish_root(&coeffs, r));
    }
    roots.sort_by(|x, y| x.partial_cmp(y).expect("roots are finite"));
    roots.dedup_by(|x, y| (*x - *y).abs() <= ROOT_DEDUP_TOL);
    roots.retain(|&r| r > 0.0 && r < 1.0);
    Ok(roots)
}

/// Bisection polish of an approximate root; returns the input unchanged when
/// no sign change brackets it (double roots).
fn polish_root(coeffs: &[f64], guess: f64) -> f64 {
    let eval = |x: f64| horner(coeffs, x);
    let mut delta = 1e-8;
    let (mut lo, mut hi) = loop {
        let lo = (guess - delta).max(1e-12);
        let hi = (guess + delta).min(1.0 - 1e-12);
        let (flo, fhi) = (eval(lo), eval(hi));
        if flo == 0.0 {
            return lo;
        }
        if fhi == 0.0 {
            return hi;
        }
        if flo * fhi < 0.0 {
            break (lo, hi);
        }
        delta *= 4.0;
        if delta > 1e-2 {
            return guess;
        }
    };
    let sign_lo = eval(lo) > 0.0;
    while hi - lo > ROOT_POLISH_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Orbit-detection verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitVerdict {
    Periodic,
    NotDetected,
}

/// Result of attempting to certify a closed orbit at one energy level.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicOrbitReport {
    /// The probed energy level.
    pub c: f64,
    /// Interior turning points (roots of `V(y) = c`), ascending.
    pub turning_points: Vec<f64>,
    /// `periodic` only when exactly two distinct turning points exist and the
    /// flow returned within [`RETURN_TOL`].
    pub verdict: OrbitVerdict,
    /// Phase-space distance from the start at the second return to `{p = 0}`,
    /// when that return happened.
    pub return_distance: Option<f64>,
    /// Interpolated time of the second return, when it happened.
    pub period_estimate: Option<f64>,
}

/// Looks for a closed orbit of the 2x2 game at energy `c < 0`.
///
/// With exactly two distinct turning points `r1 < r2`, the Hamiltonian flow
/// is started at `(r1, 0)` on the symmetry section `{p = 0}` and integrated
/// with the implicit midpoint rule until the momentum changes sign a second
/// time (each crossing is located by linear interpolation) or `t_max` runs
/// out. The verdict is `periodic` when the interpolated crossing state lies
/// within [`RETURN_TOL`] of the start; a missing second crossing yields
/// `not-detected`, never an error.
pub fn detect_periodic_orbit(
    payoff: &DMatrix<f64>,
    c: f64,
    dt: f64,
    t_max: f64,
) -> Result<PeriodicOrbitReport> {
    if !(c < 0.0) {
        return Err(Error::Argument(format!(
            "orbit detection needs a negative energy level, got {c}"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() || !(t_max > dt) || !t_max.is_finite() {
        return Err(Error::Argument(format!(
            "orbit detection needs 0 < dt < t_max, got dt = {dt}, t_max = {t_max}"
        )));
    }
    let roots = pd_quartic_roots(payoff, c)?;
    if roots.len() != 2 {
        return Ok(PeriodicOrbitReport {
            c,
            turning_points: roots,
            verdict: OrbitVerdict::NotDetected,
            return_distance: None,
            period_estimate: None,
        });
    }
    let r1 = roots[0];
    let f = FitnessModel::linear(payoff.clone())?;
    let mut y = DVector::from_element(1, r1);
    let mut p = DVector::from_element(1, 0.0);
    let steps = (t_max / dt).ceil() as usize;
    let mut crossings = 0usize;
    let mut outcome: Option<(f64, f64)> = None;
    for step in 1..=steps {
        let (ny, np) = midpoint_phase_step(&f, &y, &p, dt, step)?;
        let (p_prev, p_next) = (p[0], np[0]);
        let crossed = (p_prev != 0.0 && p_prev * p_next < 0.0)
            || (p_next == 0.0 && p_prev != 0.0);
        if crossed {
            crossings += 1;
            if crossings == 2 {
                let s = if p_prev == p_next {
                    0.0
                } else {
                    p_prev / (p_prev - p_next)
                };
                let tau = (step - 1) as f64 * dt + s * dt;
                let y_tau = y[0] + (ny[0] - y[0]) * s;
                let p_tau = p_prev + (p_next - p_prev) * s;
                let distance = (y_tau - r1).abs().max(p_tau.abs());
                outcome = Some((distance, tau));
                break;
            }
        }
        y = ny;
        p = np;
    }
    let (verdict, return_distance, period_estimate) = match outcome {
        Some((d, tau)) if d <= RETURN_TOL => (OrbitVerdict::Periodic, Some(d), Some(tau)),
        Some((d, tau)) => (OrbitVerdict::NotDetected, Some(d), Some(tau)),
        None => (OrbitVerdict::NotDetected, None, None),
    };
    Ok(PeriodicOrbitReport {
        c,
        turning_points: roots,
        verdict,
        return_distance,
        period_estimate,
    })
}
