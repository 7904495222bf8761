//! Simplex geometry: points, tangent vectors, the Fisher-Rao-Shahshahani
//! metric, local coordinates, and interior sampling.
//!
//! A state of an `n`-type population is a probability vector `x` with
//! nonnegative entries summing to one. Tangent vectors at any interior point
//! are the vectors summing to zero, and the Fisher-Rao-Shahshahani (FRS)
//! metric weighs them as `<v, w> = sum_i v_i w_i / x_i`. The local chart used
//! throughout drops the last coordinate: `y = (x_1, ..., x_{n-1})` with
//! `x_n = 1 - sum_k y_k`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Points with any coordinate below this count as boundary points.
///
/// The metric and the inverse of `diag(x)` blow up like `1/x_i`, so this
/// floor keeps their conditioning below roughly `1e9`.
pub const INTERIOR_EPS: f64 = 1e-9;

/// Tolerance on `|sum(x) - 1|` accepted when constructing a point.
pub const POINT_SUM_TOL: f64 = 1e-12;

/// Tolerance on `|sum(v)|` accepted when constructing a tangent vector.
pub const TANGENT_SUM_TOL: f64 = 1e-10;

/// A probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    x: DVector<f64>,
}

impl SimplexPoint {
    /// Wraps a vector that already satisfies the simplex constraints.
    pub fn new(x: DVector<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Argument(format!(
                "a simplex point needs at least 2 coordinates, got {}",
                x.len()
            )));
        }
        if let Some(bad) = x.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Argument(format!(
                "simplex coordinates must be finite and nonnegative, got {bad}"
            )));
        }
        let s = x.sum();
        if (s - 1.0).abs() > POINT_SUM_TOL {
            return Err(Error::Argument(format!(
                "simplex coordinates must sum to 1 within {POINT_SUM_TOL:e}, got sum {s}"
            )));
        }
        Ok(Self { x })
    }

    /// Builds a point by normalizing a nonnegative vector with positive sum.
    pub fn normalized(x: DVector<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Argument(format!(
                "a simplex point needs at least 2 coordinates, got {}",
                x.len()
            )));
        }
        if let Some(bad) = x.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Argument(format!(
                "cannot normalize: coordinates must be finite and nonnegative, got {bad}"
            )));
        }
        let s = x.sum();
        if s <= 0.0 {
            return Err(Error::Argument(
                "cannot normalize a vector with zero sum".into(),
            ));
        }
        Self::new(x / s)
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(x))
    }

    /// Wraps externally produced coordinates with relaxed tolerances,
    /// keeping them exactly as given.
    ///
    /// Accepts a coordinate sum within `sum_tol` of 1 and coordinates no
    /// more negative than `-neg_tol`; used when re-reading stored
    /// trajectories, whose states may carry accumulated rounding.
    pub(crate) fn from_raw_checked(x: DVector<f64>, sum_tol: f64, neg_tol: f64) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Argument(format!(
                "a simplex point needs at least 2 coordinates, got {}",
                x.len()
            )));
        }
        if let Some(bad) = x.iter().find(|c| !c.is_finite() || **c < -neg_tol) {
            return Err(Error::Argument(format!(
                "simplex coordinates must be finite and no more negative than {neg_tol:e}, got {bad}"
            )));
        }
        let s = x.sum();
        if (s - 1.0).abs() > sum_tol {
            return Err(Error::Argument(format!(
                "simplex coordinates must sum to 1 within {sum_tol:e}, got sum {s}"
            )));
        }
        Ok(Self { x })
    }

    /// The barycenter `(1/n, ..., 1/n)`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument(format!(
                "a simplex point needs at least 2 coordinates, got {n}"
            )));
        }
        Self::new(DVector::from_element(n, 1.0 / n as f64))
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.x
    }

    /// True when every coordinate is at least [`INTERIOR_EPS`].
    pub fn is_interior(&self) -> bool {
        self.x.iter().all(|&c| c >= INTERIOR_EPS)
    }

    pub(crate) fn require_interior(&self, op: &str) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{op} requires an interior point (all coordinates >= {INTERIOR_EPS:e}), got {:?}",
                self.x.as_slice()
            )))
        }
    }
}

impl std::ops::Index<usize> for SimplexPoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.x[i]
    }
}

/// A tangent vector to the simplex: entries sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    v: DVector<f64>,
}

impl TangentVector {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::Argument(format!(
                "a tangent vector needs at least 2 coordinates, got {}",
                v.len()
            )));
        }
        if let Some(bad) = v.iter().find(|c| !c.is_finite()) {
            return Err(Error::Argument(format!(
                "tangent coordinates must be finite, got {bad}"
            )));
        }
        let s = v.sum();
        if s.abs() > TANGENT_SUM_TOL {
            return Err(Error::Argument(format!(
                "tangent coordinates must sum to 0 within {TANGENT_SUM_TOL:e}, got sum {s}"
            )));
        }
        Ok(Self { v })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(v))
    }

    pub fn zero(n: usize) -> Self {
        Self {
            v: DVector::zeros(n.max(2)),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.v
    }
}

/// Orthogonal projection onto the tangent space: subtracts the mean.
///
/// Identity on vectors already summing to zero, idempotent in general.
pub fn project_tangent(u: &DVector<f64>) -> TangentVector {
    let mut v = u.add_scalar(-u.mean());
    // One more sweep in case massive cancellation left a visible residue.
    let res = v.sum();
    if res.abs() > TANGENT_SUM_TOL {
        v = v.add_scalar(-res / v.len() as f64);
    }
    TangentVector { v }
}

/// Fisher-Rao-Shahshahani inner product `sum_i v_i w_i / x_i`.
pub fn frs_inner(x: &SimplexPoint, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    if v.dim() != x.dim() || w.dim() != x.dim() {
        return Err(Error::Argument(format!(
            "dimension mismatch: point has {}, tangents have {} and {}",
            x.dim(),
            v.dim(),
            w.dim()
        )));
    }
    x.require_interior("the Fisher-Rao-Shahshahani inner product")?;
    Ok((0..x.dim()).map(|i| v.v[i] * w.v[i] / x[i]).sum())
}

/// FRS norm `sqrt(<v, v>)` at `x`.
pub fn frs_norm(x: &SimplexPoint, v: &TangentVector) -> Result<f64> {
    frs_inner(x, v, v).map(f64::sqrt)
}

/// The drop-last coordinate chart on the `n`-type simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalChart {
    n: usize,
}

impl LocalChart {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument(format!(
                "the chart needs ambient dimension >= 2, got {n}"
            )));
        }
        Ok(Self { n })
    }

    /// Number of simplex coordinates.
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Number of chart coordinates (`n - 1`).
    pub fn chart_dim(&self) -> usize {
        self.n - 1
    }

    /// Drops the last coordinate.
    pub fn project(&self, x: &SimplexPoint) -> Result<DVector<f64>> {
        if x.dim() != self.n {
            return Err(Error::Argument(format!(
                "chart is for dimension {}, point has {}",
                self.n,
                x.dim()
            )));
        }
        Ok(DVector::from_iterator(
            self.n - 1,
            x.coords().iter().take(self.n - 1).copied(),
        ))
    }

    /// Restores the last coordinate as `1 - sum(y)`.
    pub fn lift(&self, y: &DVector<f64>) -> Result<SimplexPoint> {
        if y.len() != self.n - 1 {
            return Err(Error::Argument(format!(
                "chart coordinates must have length {}, got {}",
                self.n - 1,
                y.len()
            )));
        }
        if let Some(bad) = y.iter().find(|c| !c.is_finite()) {
            return Err(Error::Argument(format!(
                "chart coordinates must be finite, got {bad}"
            )));
        }
        let tail = 1.0 - y.sum();
        if y.iter().any(|&c| c < 0.0) || tail < 0.0 {
            return Err(Error::Domain(format!(
                "chart coordinates lie outside the simplex: y = {:?}, implied last coordinate {tail}",
                y.as_slice()
            )));
        }
        let mut x = DVector::zeros(self.n);
        x.rows_mut(0, self.n - 1).copy_from(y);
        x[self.n - 1] = tail;
        SimplexPoint::new(x)
    }

    /// Drops the last component of a tangent vector.
    pub fn project_vector(&self, v: &TangentVector) -> Result<DVector<f64>> {
        if v.dim() != self.n {
            return Err(Error::Argument(format!(
                "chart is for dimension {}, tangent has {}",
                self.n,
                v.dim()
            )));
        }
        Ok(DVector::from_iterator(
            self.n - 1,
            v.coords().iter().take(self.n - 1).copied(),
        ))
    }

    /// Restores the last component as `-sum(vy)`.
    pub fn lift_vector(&self, vy: &DVector<f64>) -> Result<TangentVector> {
        if vy.len() != self.n - 1 {
            return Err(Error::Argument(format!(
                "chart tangent must have length {}, got {}",
                self.n - 1,
                vy.len()
            )));
        }
        let mut v = DVector::zeros(self.n);
        v.rows_mut(0, self.n - 1).copy_from(vy);
        v[self.n - 1] = -vy.sum();
        TangentVector::new(v)
    }
}

fn require_chart_interior(y: &DVector<f64>, op: &str) -> Result<f64> {
    let tail = 1.0 - y.sum();
    if y.iter().any(|&c| !(c >= INTERIOR_EPS)) || tail < INTERIOR_EPS {
        return Err(Error::Domain(format!(
            "{op} requires interior chart coordinates (components and 1 - sum >= {INTERIOR_EPS:e}), got y = {:?}",
            y.as_slice()
        )));
    }
    Ok(tail)
}

/// FRS metric in drop-last coordinates:
/// `G[i][j] = delta_ij / y_i + 1 / (1 - sum(y))`.
pub fn frs_local_metric(y: &DVector<f64>) -> Result<DMatrix<f64>> {
    let tail = require_chart_interior(y, "the local FRS metric")?;
    let m = y.len();
    let mut g = DMatrix::from_element(m, m, 1.0 / tail);
    for i in 0..m {
        g[(i, i)] += 1.0 / y[i];
    }
    Ok(g)
}

/// Closed-form inverse of [`frs_local_metric`]: `diag(y) - y y^T`.
pub fn frs_local_metric_inverse(y: &DVector<f64>) -> Result<DMatrix<f64>> {
    require_chart_interior(y, "the inverse local FRS metric")?;
    let m = y.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = if i == j { y[i] - y[i] * y[j] } else { -y[i] * y[j] };
        }
    }
    Ok(g)
}

/// Deterministic uniform (flat Dirichlet) interior samples.
///
/// Each point is a normalized vector of standard exponentials, clamped to
/// [`INTERIOR_EPS`] and renormalized.
pub fn sample_interior(n: usize, count: usize, seed: u64) -> Result<Vec<SimplexPoint>> {
    if n < 2 {
        return Err(Error::Argument(format!(
            "sampling needs dimension >= 2, got {n}"
        )));
    }
    if count == 0 {
        return Err(Error::Argument("sampling needs count >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = DVector::from_fn(n, |_, _| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        });
        let s = x.sum();
        if s <= 0.0 {
            return Err(Error::Argument(
                "degenerate exponential draw (all zeros)".into(),
            ));
        }
        x /= s;
        for c in x.iter_mut() {
            if *c < INTERIOR_EPS {
                *c = INTERIOR_EPS;
            }
        }
        out.push(SimplexPoint::normalized(x)?);
    }
    Ok(out)
}
