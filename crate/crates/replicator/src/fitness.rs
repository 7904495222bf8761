//! Fitness maps and their bracket algebra.
//!
//! A fitness map assigns a per-type growth rate `f(x)` to every population
//! state. The hat map `fhat(x) = diag(x) (f(x) - fbar(x) e)` with mean
//! fitness `fbar = x^T f(x)` turns it into the replicator vector field
//! `xdot = fhat(x)`. On fitness maps the replicator bracket
//!
//! ```text
//! {f, g}(x) = (dg/dx) fhat(x) - (df/dx) ghat(x)
//! ```
//!
//! is a Lie bracket; the componentwise-uniform maps `alpha(x) e` form its
//! ideal and are exactly the kernel of the hat map. Four representations are
//! supported: constant vectors, linear maps `x -> B x`, continuous-time
//! Markov generator matrices (fitness `diag(x)^{-1} R x`, so the replicator
//! field is the master equation `xdot = R x`), and custom closures with an
//! optional analytic Jacobian.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{SimplexPoint, TangentVector, INTERIOR_EPS};

/// Central-difference step for all finite-difference Jacobians.
///
/// Balances `O(h^2)` truncation against roundoff; derived tolerances are
/// `1e-6`.
pub const H_FD: f64 = 1e-5;

/// Tolerance on generator-matrix column sums.
pub const GENERATOR_COL_SUM_TOL: f64 = 1e-12;

/// Fixed probe coefficients for bracket linearity residuals.
pub const LINEARITY_PROBES: (f64, f64) = (2.0, -3.0);

type EvalFn = dyn Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync;

/// Closure-backed fitness map.
#[derive(Clone)]
pub struct CustomFitness {
    dim: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
}

#[derive(Clone)]
enum Kind {
    Constant(DVector<f64>),
    Linear(DMatrix<f64>),
    Generator(DMatrix<f64>),
    Custom(CustomFitness),
}

/// Tag identifying the representation of a [`FitnessModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessKind {
    Constant,
    Linear,
    Generator,
    Custom,
}

/// A fitness map in one of four representations.
///
/// Construction validates the representation invariants, so every held value
/// is well formed: generator matrices have column sums within
/// [`GENERATOR_COL_SUM_TOL`] of zero, matrices are square, and dimensions are
/// at least two.
#[derive(Clone)]
pub struct FitnessModel {
    kind: Kind,
}

impl fmt::Debug for FitnessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Constant(a) => f.debug_tuple("Constant").field(&a.as_slice()).finish(),
            Kind::Linear(b) => f.debug_tuple("Linear").field(&b).finish(),
            Kind::Generator(r) => f.debug_tuple("Generator").field(&r).finish(),
            Kind::Custom(c) => f
                .debug_struct("Custom")
                .field("dim", &c.dim)
                .field("analytic_jacobian", &c.jac.is_some())
                .finish(),
        }
    }
}

fn check_square(m: &DMatrix<f64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Argument(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() < 2 {
        return Err(Error::Argument(format!(
            "{what} needs dimension >= 2, got {}",
            m.nrows()
        )));
    }
    if m.iter().any(|c| !c.is_finite()) {
        return Err(Error::Argument(format!("{what} has non-finite entries")));
    }
    Ok(m.nrows())
}

fn check_zero_column_sums(m: &DMatrix<f64>, what: &str) -> Result<()> {
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).sum();
        if s.abs() > GENERATOR_COL_SUM_TOL {
            return Err(Error::Argument(format!(
                "{what} must have zero column sums (tol {GENERATOR_COL_SUM_TOL:e}), column {j} sums to {s}"
            )));
        }
    }
    Ok(())
}

impl FitnessModel {
    /// Constant fitness `f(x) = a`.
    pub fn constant(a: DVector<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::Argument(format!(
                "a constant fitness needs dimension >= 2, got {}",
                a.len()
            )));
        }
        if a.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("constant fitness has non-finite entries".into()));
        }
        Ok(Self { kind: Kind::Constant(a) })
    }

    /// Linear (matrix-game) fitness `f(x) = B x`.
    pub fn linear(b: DMatrix<f64>) -> Result<Self> {
        check_square(&b, "a linear fitness matrix")?;
        Ok(Self { kind: Kind::Linear(b) })
    }

    /// Fitness of a continuous-time Markov generator `R`: `f(x) = diag(x)^{-1} R x`.
    ///
    /// Requires zero column sums and nonnegative off-diagonal entries, so the
    /// induced replicator field `xdot = R x` is a master equation.
    pub fn generator(r: DMatrix<f64>) -> Result<Self> {
        check_square(&r, "a generator matrix")?;
        check_zero_column_sums(&r, "a generator matrix")?;
        for i in 0..r.nrows() {
            for j in 0..r.ncols() {
                if i != j && r[(i, j)] < 0.0 {
                    return Err(Error::Argument(format!(
                        "a generator matrix needs nonnegative off-diagonal entries, got {} at ({i}, {j})",
                        r[(i, j)]
                    )));
                }
            }
        }
        Ok(Self { kind: Kind::Generator(r) })
    }

    /// Generator-variant model from a matrix with zero column sums only.
    ///
    /// Used for commutators, whose off-diagonal entries have mixed signs; all
    /// generator-variant operations rely on the column sums alone.
    pub(crate) fn from_zero_column_sums(r: DMatrix<f64>) -> Result<Self> {
        check_square(&r, "a zero-column-sum matrix")?;
        check_zero_column_sums(&r, "a zero-column-sum matrix")?;
        Ok(Self { kind: Kind::Generator(r) })
    }

    /// Thermally activated generator: `R[i][j] = rate * exp(-beta * (barriers[i][j] - energies[j]))`
    /// off the diagonal, with diagonal entries closing each column to zero.
    pub fn arrhenius(
        barriers: &DMatrix<f64>,
        energies: &DVector<f64>,
        rate: f64,
        beta: f64,
    ) -> Result<Self> {
        let n = check_square(barriers, "a barrier matrix")?;
        if energies.len() != n {
            return Err(Error::Argument(format!(
                "energy vector length {} does not match barrier matrix dimension {n}",
                energies.len()
            )));
        }
        if !(rate > 0.0) || !rate.is_finite() || !beta.is_finite() {
            return Err(Error::Argument(format!(
                "need a finite positive rate and finite inverse temperature, got rate {rate}, beta {beta}"
            )));
        }
        let mut r = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut out = 0.0;
            for i in 0..n {
                if i != j {
                    r[(i, j)] = rate * (-beta * (barriers[(i, j)] - energies[j])).exp();
                    out += r[(i, j)];
                }
            }
            r[(j, j)] = -out;
        }
        Self::generator(r)
    }

    /// Closure-backed fitness; Jacobians fall back to central differences.
    ///
    /// The closure receives ambient coordinates (not necessarily normalized,
    /// finite-difference probes step off the simplex) and must be
    /// side-effect-free.
    pub fn custom<F>(dim: usize, eval: F) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        if dim < 2 {
            return Err(Error::Argument(format!(
                "a custom fitness needs dimension >= 2, got {dim}"
            )));
        }
        Ok(Self {
            kind: Kind::Custom(CustomFitness {
                dim,
                eval: Arc::new(eval),
                jac: None,
            }),
        })
    }

    /// Closure-backed fitness with an analytic Jacobian closure.
    pub fn custom_with_jacobian<F, J>(dim: usize, eval: F, jac: J) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync + 'static,
        J: Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        if dim < 2 {
            return Err(Error::Argument(format!(
                "a custom fitness needs dimension >= 2, got {dim}"
            )));
        }
        Ok(Self {
            kind: Kind::Custom(CustomFitness {
                dim,
                eval: Arc::new(eval),
                jac: Some(Arc::new(jac)),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Constant(a) => a.len(),
            Kind::Linear(b) => b.nrows(),
            Kind::Generator(r) => r.nrows(),
            Kind::Custom(c) => c.dim,
        }
    }

    pub fn kind(&self) -> FitnessKind {
        match &self.kind {
            Kind::Constant(_) => FitnessKind::Constant,
            Kind::Linear(_) => FitnessKind::Linear,
            Kind::Generator(_) => FitnessKind::Generator,
            Kind::Custom(_) => FitnessKind::Custom,
        }
    }

    pub fn constant_vector(&self) -> Option<&DVector<f64>> {
        match &self.kind {
            Kind::Constant(a) => Some(a),
            _ => None,
        }
    }

    pub fn linear_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            Kind::Linear(b) => Some(b),
            _ => None,
        }
    }

    pub fn generator_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            Kind::Generator(r) => Some(r),
            _ => None,
        }
    }

    /// True for the symbolically differentiable representations
    /// (everything except `Custom`).
    pub fn is_structured(&self) -> bool {
        !matches!(self.kind, Kind::Custom(_))
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::Argument(format!(
                "fitness has dimension {}, input has {n}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Raw evaluation in ambient coordinates.
    ///
    /// Finite-difference probes call this slightly off the simplex, so no
    /// normalization is assumed; the generator representation still requires
    /// every coordinate at least [`INTERIOR_EPS`] because it divides by them.
    pub(crate) fn eval_at(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(z.len())?;
        match &self.kind {
            Kind::Constant(a) => Ok(a.clone()),
            Kind::Linear(b) => Ok(b * z),
            Kind::Generator(r) => {
                if z.iter().any(|&c| c < INTERIOR_EPS) {
                    return Err(Error::Domain(format!(
                        "generator fitness needs all coordinates >= {INTERIOR_EPS:e}, got {:?}",
                        z.as_slice()
                    )));
                }
                Ok((r * z).component_div(z))
            }
            Kind::Custom(c) => {
                let f = (c.eval)(z)?;
                if f.len() != c.dim {
                    return Err(Error::Argument(format!(
                        "custom fitness closure returned length {}, expected {}",
                        f.len(),
                        c.dim
                    )));
                }
                Ok(f)
            }
        }
    }

    /// Raw Jacobian `df/dz` in ambient coordinates.
    pub(crate) fn jac_at(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(z.len())?;
        let n = z.len();
        match &self.kind {
            Kind::Constant(_) => Ok(DMatrix::zeros(n, n)),
            Kind::Linear(b) => Ok(b.clone()),
            Kind::Generator(r) => {
                // d/dz_j [(Rz)_i / z_i] = R[i][j]/z_i - delta_ij (Rz)_i / z_i^2
                let f = self.eval_at(z)?;
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = r[(i, j)] / z[i];
                    }
                    m[(i, i)] -= f[i] / z[i];
                }
                Ok(m)
            }
            Kind::Custom(c) => match &c.jac {
                Some(jac) => {
                    let m = jac(z)?;
                    if m.nrows() != n || m.ncols() != n {
                        return Err(Error::Argument(format!(
                            "custom Jacobian closure returned {}x{}, expected {n}x{n}",
                            m.nrows(),
                            m.ncols()
                        )));
                    }
                    Ok(m)
                }
                None => fd_jacobian(|w| self.eval_at(w), z),
            },
        }
    }

    /// Raw hat map `diag(z)(f - fbar e)` with `fbar = z^T f`.
    ///
    /// The generator representation evaluates as `R z` directly (identical on
    /// the simplex since `e^T R = 0`, and free of the boundary singularity).
    pub(crate) fn hat_at(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(z.len())?;
        if let Kind::Generator(r) = &self.kind {
            return Ok(r * z);
        }
        let f = self.eval_at(z)?;
        let fbar = z.dot(&f);
        Ok(z.component_mul(&f.add_scalar(-fbar)))
    }

    /// Raw Jacobian of the hat map.
    ///
    /// For the generator representation this is exactly `R`; otherwise
    /// `d fhat_i / dz_j = delta_ij (f_i - fbar) + z_i (J[i][j] - f_j - (z^T J)_j)`.
    pub(crate) fn hat_jac_at(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(z.len())?;
        if let Kind::Generator(r) = &self.kind {
            return Ok(r.clone());
        }
        let n = z.len();
        let f = self.eval_at(z)?;
        let j = self.jac_at(z)?;
        let fbar = z.dot(&f);
        let ztj = j.transpose() * z;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                m[(i, k)] = z[i] * (j[(i, k)] - f[k] - ztj[k]);
            }
            m[(i, i)] += f[i] - fbar;
        }
        Ok(m)
    }

    /// True when the second derivative of the fitness is nonzero
    /// (only the generator representation among the structured ones).
    fn has_curvature(&self) -> bool {
        matches!(self.kind, Kind::Generator(_))
    }

    /// Hessian of component `i` for structured representations.
    ///
    /// Constant and linear maps are flat; for a generator,
    /// `d^2 f_i / dz_j dz_k = -(delta_ik R[i][j] + delta_ij R[i][k]) / z_i^2
    ///  + 2 delta_ij delta_ik (Rz)_i / z_i^3`.
    pub(crate) fn hessian_at(&self, z: &DVector<f64>, i: usize) -> Result<DMatrix<f64>> {
        self.check_dim(z.len())?;
        let n = z.len();
        match &self.kind {
            Kind::Constant(_) | Kind::Linear(_) => Ok(DMatrix::zeros(n, n)),
            Kind::Generator(r) => {
                if z.iter().any(|&c| c < INTERIOR_EPS) {
                    return Err(Error::Domain(format!(
                        "generator curvature needs all coordinates >= {INTERIOR_EPS:e}, got {:?}",
                        z.as_slice()
                    )));
                }
                let zi2 = z[i] * z[i];
                let rz_i = r.row(i).transpose().dot(z);
                let mut h = DMatrix::zeros(n, n);
                for j in 0..n {
                    h[(j, i)] -= r[(i, j)] / zi2;
                    h[(i, j)] -= r[(i, j)] / zi2;
                }
                h[(i, i)] += 2.0 * rz_i / (zi2 * z[i]);
                Ok(h)
            }
            Kind::Custom(_) => Err(Error::Argument(
                "no analytic curvature for custom fitness maps".into(),
            )),
        }
    }

    /// Evaluates the fitness at a simplex point.
    pub fn evaluate(&self, x: &SimplexPoint) -> Result<DVector<f64>> {
        self.check_dim(x.dim())?;
        if matches!(self.kind, Kind::Generator(_)) {
            x.require_interior("evaluating a generator fitness")?;
        }
        self.eval_at(x.coords())
    }

    /// Mean fitness `x^T f(x)`.
    pub fn mean_fitness(&self, x: &SimplexPoint) -> Result<f64> {
        Ok(x.coords().dot(&self.evaluate(x)?))
    }

    /// Replicator vector field `fhat(x) = diag(x)(f(x) - fbar e)`.
    pub fn hat(&self, x: &SimplexPoint) -> Result<TangentVector> {
        self.check_dim(x.dim())?;
        TangentVector::new(self.hat_at(x.coords())?)
    }

    /// Fitness Jacobian `df/dx` at an interior point.
    pub fn jacobian(&self, x: &SimplexPoint) -> Result<DMatrix<f64>> {
        self.check_dim(x.dim())?;
        x.require_interior("the fitness jacobian")?;
        self.jac_at(x.coords())
    }
}

/// Central-difference Jacobian with step [`H_FD`].
fn fd_jacobian<F>(eval: F, z: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = z.len();
    let mut m = DMatrix::zeros(n, n);
    let mut zp = z.clone();
    let mut zm = z.clone();
    for j in 0..n {
        zp[j] = z[j] + H_FD;
        zm[j] = z[j] - H_FD;
        let col = (eval(&zp)? - eval(&zm)?) / (2.0 * H_FD);
        m.set_column(j, &col);
        zp[j] = z[j];
        zm[j] = z[j];
    }
    Ok(m)
}

/// Replicator bracket `{f, g}(x) = (dg/dx) fhat(x) - (df/dx) ghat(x)`.
///
/// Generator pairs short-circuit to the exact commutator
/// ([`r_bracket_generator`]). Otherwise the result is a lazily evaluated
/// custom map; it carries a symbolically composed Jacobian whenever both
/// inputs are structured, and falls back to finite differences if either
/// input is custom.
pub fn r_bracket(f: &FitnessModel, g: &FitnessModel) -> Result<FitnessModel> {
    if f.dim() != g.dim() {
        return Err(Error::Argument(format!(
            "bracket of maps with different dimensions {} and {}",
            f.dim(),
            g.dim()
        )));
    }
    if let (Some(a), Some(b)) = (f.generator_matrix(), g.generator_matrix()) {
        return r_bracket_generator(a, b);
    }
    let n = f.dim();
    let (fe, ge) = (f.clone(), g.clone());
    let eval = move |z: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(ge.jac_at(z)? * fe.hat_at(z)? - fe.jac_at(z)? * ge.hat_at(z)?)
    };
    if f.is_structured() && g.is_structured() {
        let (fj, gj) = (f.clone(), g.clone());
        let jac = move |z: &DVector<f64>| -> Result<DMatrix<f64>> {
            let fh = fj.hat_at(z)?;
            let gh = gj.hat_at(z)?;
            // d/dz [J_g fhat - J_f ghat]
            //   = J_g Jhat_f - J_f Jhat_g + rows_i[fhat^T H^g_i - ghat^T H^f_i]
            let mut m = gj.jac_at(z)? * fj.hat_jac_at(z)? - fj.jac_at(z)? * gj.hat_jac_at(z)?;
            if gj.has_curvature() {
                for i in 0..n {
                    let contraction = gj.hessian_at(z, i)? * &fh;
                    for k in 0..n {
                        m[(i, k)] += contraction[k];
                    }
                }
            }
            if fj.has_curvature() {
                for i in 0..n {
                    let contraction = fj.hessian_at(z, i)? * &gh;
                    for k in 0..n {
                        m[(i, k)] -= contraction[k];
                    }
                }
            }
            Ok(m)
        };
        FitnessModel::custom_with_jacobian(n, eval, jac)
    } else {
        FitnessModel::custom(n, eval)
    }
}

/// Exact bracket of two generator fitness maps: the generator model of the
/// commutator `BA - AB`.
///
/// Both inputs only need zero column sums; the output keeps that invariant
/// and agrees pointwise with the generic [`r_bracket`] on the interior.
pub fn r_bracket_generator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<FitnessModel> {
    let na = check_square(a, "the first generator matrix")?;
    let nb = check_square(b, "the second generator matrix")?;
    if na != nb {
        return Err(Error::Argument(format!(
            "generator matrices have different dimensions {na} and {nb}"
        )));
    }
    check_zero_column_sums(a, "the first generator matrix")?;
    check_zero_column_sums(b, "the second generator matrix")?;
    FitnessModel::from_zero_column_sums(b * a - a * b)
}

/// Linear combination `alpha f + beta g` as a fitness map.
///
/// Same-representation inputs stay structured; mixed inputs become a custom
/// map with a combined analytic Jacobian closure.
pub fn linear_combination(
    alpha: f64,
    f: &FitnessModel,
    beta: f64,
    g: &FitnessModel,
) -> Result<FitnessModel> {
    if f.dim() != g.dim() {
        return Err(Error::Argument(format!(
            "combination of maps with different dimensions {} and {}",
            f.dim(),
            g.dim()
        )));
    }
    match (&f.kind, &g.kind) {
        (Kind::Constant(a), Kind::Constant(b)) => FitnessModel::constant(a * alpha + b * beta),
        (Kind::Linear(a), Kind::Linear(b)) => FitnessModel::linear(a * alpha + b * beta),
        (Kind::Generator(a), Kind::Generator(b)) => {
            FitnessModel::from_zero_column_sums(a * alpha + b * beta)
        }
        _ => {
            let n = f.dim();
            let (fe, ge) = (f.clone(), g.clone());
            let eval = move |z: &DVector<f64>| -> Result<DVector<f64>> {
                Ok(fe.eval_at(z)? * alpha + ge.eval_at(z)? * beta)
            };
            let (fj, gj) = (f.clone(), g.clone());
            let jac = move |z: &DVector<f64>| -> Result<DMatrix<f64>> {
                Ok(fj.jac_at(z)? * alpha + gj.jac_at(z)? * beta)
            };
            FitnessModel::custom_with_jacobian(n, eval, jac)
        }
    }
}

/// Ideal-membership test: true when `max_i f_i - min_i f_i <= tol` at every
/// sample.
pub fn is_componentwise_uniform(
    f: &FitnessModel,
    samples: &[SimplexPoint],
    tol: f64,
) -> Result<bool> {
    if samples.is_empty() {
        return Err(Error::Argument(
            "uniformity test needs at least one sample".into(),
        ));
    }
    for x in samples {
        let v = f.evaluate(x)?;
        let spread = v.max() - v.min();
        if spread > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-point residuals certifying the bracket axioms at sampled states.
///
/// `homomorphism` is populated by the flow-side check
/// (`dynamics::homomorphism_residual`); it is empty when only the algebraic
/// axioms were evaluated.
#[derive(Debug, Clone, Serialize)]
pub struct BracketReport {
    pub points: Vec<Vec<f64>>,
    pub skew: Vec<f64>,
    pub linearity: Vec<f64>,
    pub jacobi: Vec<f64>,
    pub homomorphism: Vec<f64>,
    pub max_residual: f64,
    pub tol: f64,
}

impl BracketReport {
    pub fn passes(&self) -> bool {
        self.max_residual <= self.tol
    }

    /// Attaches flow-side homomorphism residuals and refreshes the maximum.
    pub fn set_homomorphism(&mut self, residuals: Vec<f64>) {
        self.homomorphism = residuals;
        self.max_residual = self
            .skew
            .iter()
            .chain(&self.linearity)
            .chain(&self.jacobi)
            .chain(&self.homomorphism)
            .fold(0.0f64, |m, &r| m.max(r));
    }
}

/// Evaluates skew-symmetry, linearity (probes [`LINEARITY_PROBES`] on the
/// pair `(f, h)`), and the Jacobi identity at the given samples.
pub fn bracket_axiom_report(
    f: &FitnessModel,
    g: &FitnessModel,
    h: &FitnessModel,
    samples: &[SimplexPoint],
    tol: f64,
) -> Result<BracketReport> {
    if samples.is_empty() {
        return Err(Error::Argument(
            "bracket axiom report needs at least one sample".into(),
        ));
    }
    let fg = r_bracket(f, g)?;
    let gf = r_bracket(g, f)?;
    let hg = r_bracket(h, g)?;
    let (pa, pb) = LINEARITY_PROBES;
    let combo_g = r_bracket(&linear_combination(pa, f, pb, h)?, g)?;
    let f_gh = r_bracket(f, &r_bracket(g, h)?)?;
    let g_hf = r_bracket(g, &r_bracket(h, f)?)?;
    let h_fg = r_bracket(h, &fg)?;

    let mut report = BracketReport {
        points: Vec::with_capacity(samples.len()),
        skew: Vec::with_capacity(samples.len()),
        linearity: Vec::with_capacity(samples.len()),
        jacobi: Vec::with_capacity(samples.len()),
        homomorphism: Vec::new(),
        max_residual: 0.0,
        tol,
    };
    for x in samples {
        let skew = (fg.evaluate(x)? + gf.evaluate(x)?).amax();
        let lin =
            (combo_g.evaluate(x)? - fg.evaluate(x)? * pa - hg.evaluate(x)? * pb).amax();
        let jac = (f_gh.evaluate(x)? + g_hf.evaluate(x)? + h_fg.evaluate(x)?).amax();
        report.points.push(x.coords().as_slice().to_vec());
        report.skew.push(skew);
        report.linearity.push(lin);
        report.jacobi.push(jac);
        report.max_residual = report.max_residual.max(skew).max(lin).max(jac);
    }
    Ok(report)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum ModelJson {
    Constant { a: Vec<f64> },
    Linear {
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
    },
    Generator {
        #[serde(rename = "R")]
        r: Vec<Vec<f64>>,
    },
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Argument(format!("{what}: empty matrix")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Argument(format!(
                "{what}: row {i} has {} entries, expected {n} (square, row-major)",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl FitnessModel {
    /// Parses the JSON model schema:
    /// `{"type":"constant","a":[...]}`, `{"type":"linear","B":[[...]]}`,
    /// `{"type":"generator","R":[[...]]}` (matrices row-major).
    pub fn from_json(s: &str) -> Result<Self> {
        let parsed: ModelJson = serde_json::from_str(s)
            .map_err(|e| Error::Argument(format!("invalid model JSON: {e}")))?;
        match parsed {
            ModelJson::Constant { a } => Self::constant(DVector::from_vec(a)),
            ModelJson::Linear { b } => Self::linear(rows_to_matrix(&b, "linear model")?),
            ModelJson::Generator { r } => Self::generator(rows_to_matrix(&r, "generator model")?),
        }
    }

    /// Serializes structured representations to the JSON model schema.
    pub fn to_json(&self) -> Result<String> {
        let spec = match &self.kind {
            Kind::Constant(a) => ModelJson::Constant {
                a: a.as_slice().to_vec(),
            },
            Kind::Linear(b) => ModelJson::Linear {
                b: matrix_to_rows(b),
            },
            Kind::Generator(r) => ModelJson::Generator {
                r: matrix_to_rows(r),
            },
            Kind::Custom(_) => {
                return Err(Error::Argument(
                    "custom fitness maps have no JSON representation".into(),
                ))
            }
        };
        serde_json::to_string_pretty(&spec)
            .map_err(|e| Error::Argument(format!("serialization failed: {e}")))
    }
}
