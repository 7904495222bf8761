//! Chow–Rashevskii controllability machinery for replicator control systems.
//!
//! A replicator control system drives the population with externally scaled
//! fitness maps: `xdot = sum_k u_k fhat_k(x)`. The system is controllable on
//! the simplex interior when the bracket-generated fields span the tangent
//! space at every interior point. For the constant-plus-matrix-game pair
//! `f_1(x) = a`, `g_1(x) = Bx`, iterated bracketing produces the columns of
//!
//! ```text
//! G(x) = [Bx  BAx  BA^2x ... BA^{n-1}x] = B Lambda(x) V,   A = diag(a),
//! ```
//!
//! with `V` the Vandermonde matrix of `a`. Spanning at every interior point
//! reduces to a Vandermonde minor analysis: the annihilator rows `r_k` of the
//! column-deleted Vandermonde blocks assemble into a matrix `R` with trivial
//! null space, the minors obey a Schur-polynomial (elementary-symmetric)
//! identity, and for every interior `x` some `k` certifies a nonvanishing key
//! scalar `r_k Lambda^{-1}(x) B^{-1} e`. This module builds all of those
//! objects, runs sampled span tests, and assembles the evidence into a
//! serializable report. The sampled verdict is a sufficient-condition check
//! at finitely many points, never a proof.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitness::{is_componentwise_uniform, linear_combination, r_bracket, FitnessModel};
use crate::simplex::{project_tangent, sample_interior, SimplexPoint};

/// Entries of the rate vector must differ pairwise by more than this.
pub const DISTINCTNESS_TOL: f64 = 1e-9;

/// The key scalar `r_k Lambda^{-1}(x) B^{-1} e` counts as nonzero above this.
pub const KEY_STEP_TOL: f64 = 1e-9;

/// Default relative singular-value cutoff for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// A control matrix with a larger condition number is treated as singular.
pub const CONDITION_NUMBER_MAX: f64 = 1e12;

/// Annihilator rows must kill their Vandermonde block to this relative size.
pub const ANNIHILATOR_TOL: f64 = 1e-10;

/// Number of fixed interior samples used to identify maps modulo the ideal.
pub const CLOSURE_DEDUP_SAMPLES: usize = 25;

/// Two maps are identified when their difference is componentwise uniform
/// within this tolerance at the dedup samples.
pub const CLOSURE_DEDUP_TOL: f64 = 1e-8;

const CLOSURE_DEDUP_SEED: u64 = 77;

/// A driftless control system on the simplex: externally scaled fitness maps
/// whose hat fields steer the population.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    maps: Vec<FitnessModel>,
}

impl ControlSystem {
    /// At least one map; all must share one dimension.
    pub fn new(maps: Vec<FitnessModel>) -> Result<Self> {
        let first = maps.first().ok_or_else(|| {
            Error::Argument("a control system needs at least one fitness map".into())
        })?;
        let n = first.dim();
        if maps.iter().any(|m| m.dim() != n) {
            return Err(Error::Argument(
                "all fitness maps of a control system must share one dimension".into(),
            ));
        }
        Ok(Self { maps })
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn maps(&self) -> &[FitnessModel] {
        &self.maps
    }

    /// Span test of this system's hat fields at an interior point.
    pub fn span_at(&self, x: &SimplexPoint, tol_rank: f64) -> Result<SpanTestReport> {
        span_test(&self.maps, x, tol_rank)
    }
}

/// Whether a family of hat fields spans the tangent space at one point.
#[derive(Debug, Clone, Serialize)]
pub struct SpanTestReport {
    /// The probed interior point.
    pub x: Vec<f64>,
    /// Singular values of the tangent-projected field matrix, descending.
    pub singular_values: Vec<f64>,
    /// Count of singular values above `tol_rank` times the largest.
    pub rank: usize,
    /// True exactly when `rank = n - 1`, the tangent-space dimension.
    pub spans: bool,
}

/// Stacks the hat fields at `x` as columns, projects them onto the tangent
/// space, and counts singular values above `tol_rank` relative to the
/// largest. The verdict `spans` requires rank `n - 1`; the rank can never
/// exceed that, since every projected column sums to zero.
pub fn span_test(
    fields: &[FitnessModel],
    x: &SimplexPoint,
    tol_rank: f64,
) -> Result<SpanTestReport> {
    if fields.is_empty() {
        return Err(Error::Argument("span test needs at least one field".into()));
    }
    if !(tol_rank > 0.0) || !tol_rank.is_finite() {
        return Err(Error::Argument(format!(
            "rank tolerance must be positive, got {tol_rank}"
        )));
    }
    let n = x.dim();
    if fields.iter().any(|f| f.dim() != n) {
        return Err(Error::Argument(
            "span-test fields must match the point's dimension".into(),
        ));
    }
    x.require_interior("the span test")?;
    let mut columns = DMatrix::zeros(n, fields.len());
    for (j, f) in fields.iter().enumerate() {
        let hat = f.hat(x)?;
        let projected = project_tangent(hat.coords());
        columns.set_column(j, projected.coords());
    }
    let singular_values: Vec<f64> = columns.svd(false, false).singular_values.iter().copied().collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let rank = if sigma_max > 0.0 {
        singular_values.iter().filter(|&&s| s > tol_rank * sigma_max).count()
    } else {
        0
    };
    Ok(SpanTestReport {
        x: x.coords().iter().copied().collect(),
        singular_values,
        rank,
        spans: rank == n - 1,
    })
}

/// The bracket-generated field matrix `G(x)` with columns `B A^{k-1} x`,
/// `A = diag(a)`; algebraically `G = B Lambda(x) V`.
pub fn build_g(b: &DMatrix<f64>, a: &DVector<f64>, x: &SimplexPoint) -> Result<DMatrix<f64>> {
    let n = x.dim();
    if b.nrows() != n || b.ncols() != n || a.len() != n {
        return Err(Error::Argument(format!(
            "field matrix needs B {n}x{n} and a of length {n}, got B {}x{} and a of length {}",
            b.nrows(),
            b.ncols(),
            a.len()
        )));
    }
    if b.iter().chain(a.iter()).any(|c| !c.is_finite()) {
        return Err(Error::Argument(
            "field-matrix inputs must be finite".into(),
        ));
    }
    let mut g = DMatrix::zeros(n, n);
    let mut w = x.coords().clone_owned();
    for k in 0..n {
        g.set_column(k, &(b * &w));
        w.component_mul_assign(a);
    }
    Ok(g)
}

/// The Vandermonde matrix `V[i][k] = a_i^k`, `k = 0..n-1`, of the rate
/// vector, its base minor and column-deleted minors, and the annihilator
/// rows of the column-deleted blocks.
#[derive(Debug, Clone)]
pub struct VandermondeBundle {
    a: DVector<f64>,
    v: DMatrix<f64>,
    base_det: f64,
    minor_dets: Vec<f64>,
    r: DMatrix<f64>,
    sigma_min_r: f64,
}

impl VandermondeBundle {
    pub fn a(&self) -> &DVector<f64> {
        &self.a
    }

    /// The full Vandermonde matrix.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Determinant of the base minor: last row and last column deleted.
    pub fn base_det(&self) -> f64 {
        self.base_det
    }

    /// Determinant of the k-th minor (last row and column k deleted),
    /// `k = 1..=n`.
    pub fn minor_dets(&self) -> &[f64] {
        &self.minor_dets
    }

    /// Annihilator matrix `R`: row `k-1` is `r_k`, the left-null row of the
    /// Vandermonde block with column k deleted, scaled so its last entry is
    /// `-1`.
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Row `r_k` (1-based `k`).
    pub fn r_row(&self, k: usize) -> DVector<f64> {
        self.r.row(k - 1).transpose()
    }

    /// Smallest singular value of `R`; positive exactly when the null space
    /// is trivial.
    pub fn sigma_min_r(&self) -> f64 {
        self.sigma_min_r
    }

    /// The three report fields: minor determinants, annihilator rows, and
    /// the smallest singular value of `R`.
    pub fn summary(&self) -> BundleSummary {
        BundleSummary {
            dets: self.minor_dets.clone(),
            r_rows: (0..self.r.nrows())
                .map(|i| self.r.row(i).iter().copied().collect())
                .collect(),
            sigma_min_r: self.sigma_min_r,
        }
    }
}

/// Serializable excerpt of a [`VandermondeBundle`].
#[derive(Debug, Clone, Serialize)]
pub struct BundleSummary {
    pub dets: Vec<f64>,
    pub r_rows: Vec<Vec<f64>>,
    #[serde(rename = "sigma_min_R")]
    pub sigma_min_r: f64,
}

fn check_rate_vector(a: &DVector<f64>) -> Result<()> {
    if a.len() < 2 {
        return Err(Error::Argument(format!(
            "the rate vector needs at least 2 entries, got {}",
            a.len()
        )));
    }
    if a.iter().any(|c| !c.is_finite()) {
        return Err(Error::Argument("the rate vector must be finite".into()));
    }
    if a.iter().any(|&c| c <= 0.0) {
        return Err(Error::Hypothesis(
            "rate-vector entries must be positive".into(),
        ));
    }
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if (a[i] - a[j]).abs() <= DISTINCTNESS_TOL {
                return Err(Error::Hypothesis(format!(
                    "rate-vector entries must be distinct: a[{}] = {} and a[{}] = {} coincide",
                    i + 1,
                    a[i],
                    j + 1,
                    a[j]
                )));
            }
        }
    }
    Ok(())
}

fn vandermonde_matrix(a: &DVector<f64>) -> DMatrix<f64> {
    let n = a.len();
    let mut v = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut p = 1.0;
        for k in 0..n {
            v[(i, k)] = p;
            p *= a[i];
        }
    }
    v
}

fn delete_row_col(m: &DMatrix<f64>, drop_row: usize, drop_col: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows() - 1, m.ncols() - 1);
    let mut oi = 0;
    for i in 0..m.nrows() {
        if i == drop_row {
            continue;
        }
        let mut oj = 0;
        for j in 0..m.ncols() {
            if j == drop_col {
                continue;
            }
            out[(oi, oj)] = m[(i, j)];
            oj += 1;
        }
        oi += 1;
    }
    out
}

fn delete_col(m: &DMatrix<f64>, drop_col: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols() - 1);
    let mut oj = 0;
    for j in 0..m.ncols() {
        if j == drop_col {
            continue;
        }
        out.set_column(oj, &m.column(j));
        oj += 1;
    }
    out
}

/// Left-null row of the rank-deficient square padding of `block`
/// (`n x (n-1)` of rank `n-1`), from the singular vector of the smallest
/// singular value.
fn left_null_row(block: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = block.nrows();
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (n, n - 1)).copy_from(block);
    let svd = padded.svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Hypothesis("left singular vectors unavailable".into()))?;
    let mut idx = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < svd.singular_values[idx] {
            idx = i;
        }
    }
    Ok(u.column(idx).clone_owned())
}

/// Builds the Vandermonde bundle for a distinct, positive rate vector and
/// validates its invariants: nonsingular `V`, annihilation of each block by
/// its `r_k` within [`ANNIHILATOR_TOL`], `r_k` not orthogonal to the deleted
/// power column, and trivial null space of `R`.
pub fn vandermonde_bundle(a: &DVector<f64>) -> Result<VandermondeBundle> {
    check_rate_vector(a)?;
    let n = a.len();
    let v = vandermonde_matrix(a);
    let v_det = v.clone().determinant();
    if v_det.abs() <= 0.0 {
        return Err(Error::Hypothesis(
            "the Vandermonde matrix of the rate vector is singular".into(),
        ));
    }
    let base_det = delete_row_col(&v, n - 1, n - 1).determinant();
    let mut minor_dets = Vec::with_capacity(n);
    for k in 0..n {
        minor_dets.push(delete_row_col(&v, n - 1, k).determinant());
    }

    let mut r = DMatrix::zeros(n, n);
    for k in 0..n {
        let block = delete_col(&v, k);
        let null = left_null_row(&block)?;
        let last = null[n - 1];
        if last.abs() <= 1e-12 * null.norm() {
            return Err(Error::Hypothesis(format!(
                "annihilator row {} cannot be scaled to end in -1",
                k + 1
            )));
        }
        let mut row = &null * (-1.0 / last);
        row[n - 1] = -1.0;
        // Invariant: r_k kills every kept power column.
        let worst = (row.transpose() * &block).amax();
        if worst > ANNIHILATOR_TOL * block.norm() {
            return Err(Error::Hypothesis(format!(
                "annihilator row {} leaves residual {worst:e} on its Vandermonde block",
                k + 1
            )));
        }
        // Invariant: r_k sees the deleted column a^{k-1}.
        let seen = row.dot(&v.column(k));
        if seen.abs() <= 1e-12 * row.norm() * v.column(k).norm() {
            return Err(Error::Hypothesis(format!(
                "annihilator row {} is orthogonal to its deleted power column",
                k + 1
            )));
        }
        r.row_mut(k).copy_from(&row.transpose());
    }

    let sv = r.clone().svd(false, false).singular_values;
    let sigma_min_r = sv.iter().fold(f64::INFINITY, |m, &s| m.min(s));
    let sigma_max_r = sv.iter().fold(0.0f64, |m, &s| m.max(s));
    if !(sigma_min_r > DEFAULT_RANK_TOL * sigma_max_r) {
        return Err(Error::Hypothesis(format!(
            "the annihilator matrix is numerically singular (smallest singular value {sigma_min_r:e})"
        )));
    }
    Ok(VandermondeBundle {
        a: a.clone(),
        v,
        base_det,
        minor_dets,
        r,
        sigma_min_r,
    })
}

/// Elementary symmetric polynomials `e_0..e_m` of the given values, via the
/// coefficient recurrence of `prod_i (1 + a_i t)`.
pub fn elementary_symmetric(vals: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; vals.len() + 1];
    e[0] = 1.0;
    for &v in vals {
        for m in (1..e.len()).rev() {
            e[m] += v * e[m - 1];
        }
    }
    e
}

/// Brute-force evaluation of `e_m` as the sum over strictly increasing index
/// subsets of size `m` — the semistandard-tableaux expansion of the
/// single-column Schur polynomial, with every monomial positive for positive
/// inputs.
pub fn ssyt_elementary(vals: &[f64], m: usize) -> f64 {
    fn rec(vals: &[f64], m: usize, start: usize) -> f64 {
        if m == 0 {
            return 1.0;
        }
        let mut acc = 0.0;
        for i in start..=vals.len().saturating_sub(m) {
            acc += vals[i] * rec(vals, m - 1, i + 1);
        }
        acc
    }
    rec(vals, m, 0)
}

/// Per-column comparison of `|det Vminor_k|` against
/// `|det Vbase| * e_{n-k}(a_1..a_{n-1})`.
#[derive(Debug, Clone)]
pub struct SchurMinorReport {
    pub a: Vec<f64>,
    /// `e_{n-k}` for `k = 1..=n`.
    pub elementary_values: Vec<f64>,
    /// Relative identity error per `k`.
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
}

/// Checks the minor identity `|det Vminor_k| = |det Vbase| * e_{n-k}` for
/// all `k`, with the elementary symmetric polynomials of the first `n-1`
/// rates. Requires `n <= 8`; also asserts every `e_{n-k}` is positive,
/// reflecting the monomial positivity of its tableaux expansion.
pub fn schur_minor_identity(a: &DVector<f64>) -> Result<SchurMinorReport> {
    if a.len() > 8 {
        return Err(Error::Argument(format!(
            "the minor identity check supports up to 8 rates, got {}",
            a.len()
        )));
    }
    let bundle = vandermonde_bundle(a)?;
    let n = a.len();
    let head: Vec<f64> = a.iter().take(n - 1).copied().collect();
    let e = elementary_symmetric(&head);
    let base = bundle.base_det().abs();
    let mut elementary_values = Vec::with_capacity(n);
    let mut relative_errors = Vec::with_capacity(n);
    let mut max_relative_error = 0.0f64;
    for k in 1..=n {
        let em = e[n - k];
        if !(em > 0.0) {
            return Err(Error::Hypothesis(format!(
                "elementary symmetric value e_{} is not positive",
                n - k
            )));
        }
        let expected = base * em;
        let err = (bundle.minor_dets()[k - 1].abs() - expected).abs() / expected;
        elementary_values.push(em);
        relative_errors.push(err);
        max_relative_error = max_relative_error.max(err);
    }
    Ok(SchurMinorReport {
        a: a.iter().copied().collect(),
        elementary_values,
        relative_errors,
        max_relative_error,
    })
}

/// Breadth-first closure of the seeds under the R-bracket up to the given
/// nesting depth.
///
/// Each new level brackets every earlier element with the previous level.
/// Candidates that vanish modulo the componentwise-uniform ideal are
/// dropped, and two maps are identified when their difference (or sum, to
/// absorb the bracket's antisymmetry) is componentwise uniform at
/// [`CLOSURE_DEDUP_SAMPLES`] fixed interior samples with tolerance
/// [`CLOSURE_DEDUP_TOL`]. The result lists representatives modulo the ideal
/// with no claim of minimality.
pub fn generate_bracket_closure(
    seeds: &[FitnessModel],
    depth: usize,
) -> Result<Vec<FitnessModel>> {
    let first = seeds.first().ok_or_else(|| {
        Error::Argument("the bracket closure needs at least one seed".into())
    })?;
    let n = first.dim();
    if seeds.iter().any(|s| s.dim() != n) {
        return Err(Error::Argument(
            "all bracket-closure seeds must share one dimension".into(),
        ));
    }
    let samples = sample_interior(n, CLOSURE_DEDUP_SAMPLES, CLOSURE_DEDUP_SEED)?;
    let is_ideal =
        |f: &FitnessModel| is_componentwise_uniform(f, &samples, CLOSURE_DEDUP_TOL);
    let mut closure: Vec<FitnessModel> = Vec::new();
    let mut level_start = 0usize;
    for seed in seeds {
        if is_ideal(seed)? || equals_any(seed, &closure, &is_ideal)? {
            continue;
        }
        closure.push(seed.clone());
    }
    for _ in 0..depth {
        let level_end = closure.len();
        if level_start == level_end {
            break;
        }
        for j in level_start..level_end {
            for i in 0..j {
                let candidate = r_bracket(&closure[i], &closure[j])?;
                if is_ideal(&candidate)? || equals_any(&candidate, &closure, &is_ideal)? {
                    continue;
                }
                closure.push(candidate);
            }
        }
        level_start = level_end;
    }
    Ok(closure)
}

fn equals_any(
    candidate: &FitnessModel,
    closure: &[FitnessModel],
    is_ideal: &impl Fn(&FitnessModel) -> Result<bool>,
) -> Result<bool> {
    for existing in closure {
        let diff = linear_combination(1.0, candidate, -1.0, existing)?;
        if is_ideal(&diff)? {
            return Ok(true);
        }
        let sum = linear_combination(1.0, candidate, 1.0, existing)?;
        if is_ideal(&sum)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Structural hypothesis checks for the rate vector and control matrix.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisChecks {
    pub a_distinct: bool,
    pub a_positive: bool,
    pub b_nonsingular: bool,
    /// `None` when the control matrix is exactly singular.
    pub b_condition_number: Option<f64>,
    /// Human-readable description of every failed hypothesis.
    pub failures: Vec<String>,
}

impl HypothesisChecks {
    pub fn all_hold(&self) -> bool {
        self.a_distinct && self.a_positive && self.b_nonsingular
    }
}

/// Span outcome at one sampled point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleVerdict {
    Spans,
    Deficient,
}

/// Per-sample evidence: the point, the first `k` whose key scalar
/// `r_k Lambda^{-1}(x) B^{-1} e` exceeds [`KEY_STEP_TOL`], and the span rank.
#[derive(Debug, Clone, Serialize)]
pub struct SampleOutcome {
    pub x: Vec<f64>,
    pub chosen_k: Option<usize>,
    pub rank: usize,
    pub verdict: SampleVerdict,
}

/// Overall verdict of the sampled controllability check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllabilityVerdict {
    /// Hypotheses hold and every sampled point spans.
    Controllable,
    /// Hypotheses hold but some sampled point failed to span.
    Undetermined,
    /// A hypothesis failed; the span machinery was not run.
    Withheld,
}

/// Full evidence record of the sampled controllability check.
#[derive(Debug, Clone, Serialize)]
pub struct ControllabilityReport {
    pub hypotheses: HypothesisChecks,
    /// `None` when the rate-vector hypotheses fail.
    pub bundle: Option<BundleSummary>,
    pub samples: Vec<SampleOutcome>,
    pub verdict: ControllabilityVerdict,
}

impl ControllabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Sampled sufficient-condition check of interior controllability for the
/// constant-plus-matrix-game system defined by rates `a` and control matrix
/// `b`.
///
/// Hypothesis failures (repeated or nonpositive rates, near-singular `b`)
/// are recorded in the report with verdict `withheld`, never raised;
/// structural misuse (shape mismatch, non-finite input, zero samples) is an
/// argument error. Samples are Dirichlet-uniform interior points from the
/// given seed; each is tested for a nonvanishing key scalar and for the span
/// of the bracket-generated fields `B A^{k-1} x`.
pub fn controllability_verdict(
    a: &DVector<f64>,
    b: &DMatrix<f64>,
    num_samples: usize,
    seed: u64,
) -> Result<ControllabilityReport> {
    let n = a.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "the rate vector needs at least 2 entries, got {n}"
        )));
    }
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::Argument(format!(
            "the control matrix must be {n}x{n}, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    if a.iter().chain(b.iter()).any(|c| !c.is_finite()) {
        return Err(Error::Argument(
            "controllability inputs must be finite".into(),
        ));
    }
    if num_samples == 0 {
        return Err(Error::Argument("at least one sample is required".into()));
    }

    let mut failures = Vec::new();
    let a_positive = a.iter().all(|&c| c > 0.0);
    if !a_positive {
        failures.push("rate-vector entries are not all positive".to_string());
    }
    let mut a_distinct = true;
    'outer: for i in 0..n {
        for j in i + 1..n {
            if (a[i] - a[j]).abs() <= DISTINCTNESS_TOL {
                a_distinct = false;
                failures.push(format!(
                    "rate vector is not distinct: a[{}] = {} and a[{}] = {} coincide",
                    i + 1,
                    a[i],
                    j + 1,
                    a[j]
                ));
                break 'outer;
            }
        }
    }
    let sv = b.clone().svd(false, false).singular_values;
    let sigma_max = sv.iter().fold(0.0f64, |m, &s| m.max(s));
    let sigma_min = sv.iter().fold(f64::INFINITY, |m, &s| m.min(s));
    let b_condition_number = if sigma_min > 0.0 {
        Some(sigma_max / sigma_min)
    } else {
        None
    };
    let b_nonsingular = match b_condition_number {
        Some(c) => c <= CONDITION_NUMBER_MAX,
        None => false,
    };
    if !b_nonsingular {
        failures.push(match b_condition_number {
            Some(c) => format!("control matrix is near-singular (condition number {c:.3e})"),
            None => "control matrix is singular".to_string(),
        });
    }

    let bundle = if a_positive && a_distinct {
        match vandermonde_bundle(a) {
            Ok(bundle) => Some(bundle),
            Err(e) => {
                failures.push(format!("rate-vector analysis failed: {e}"));
                None
            }
        }
    } else {
        None
    };

    let hypotheses = HypothesisChecks {
        a_distinct,
        a_positive,
        b_nonsingular,
        b_condition_number,
        failures,
    };
    if !hypotheses.all_hold() || bundle.is_none() {
        let mut hypotheses = hypotheses;
        if bundle.is_none() && hypotheses.failures.is_empty() {
            hypotheses
                .failures
                .push("rate-vector analysis unavailable".to_string());
        }
        return Ok(ControllabilityReport {
            hypotheses,
            bundle: bundle.map(|bu| bu.summary()),
            samples: Vec::new(),
            verdict: ControllabilityVerdict::Withheld,
        });
    }
    let bundle = bundle.expect("hypotheses hold");
    let b_inv = b
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Hypothesis("control matrix inversion failed".into()))?;
    let b_inv_e = &b_inv * DVector::from_element(n, 1.0);

    // The bracket-generated fields: matrix games B A^{k-1}.
    let a_diag = DMatrix::from_diagonal(a);
    let mut fields = Vec::with_capacity(n);
    let mut power = DMatrix::identity(n, n);
    for _ in 0..n {
        fields.push(FitnessModel::linear(b * &power)?);
        power *= &a_diag;
    }
    let system = ControlSystem::new(fields)?;

    let points = sample_interior(n, num_samples, seed)?;
    let mut samples = Vec::with_capacity(num_samples);
    let mut all_span = true;
    for x in &points {
        let mut weighted = b_inv_e.clone();
        for i in 0..n {
            weighted[i] /= x[i];
        }
        let mut chosen_k = None;
        for k in 1..=n {
            if bundle.r_row(k).dot(&weighted).abs() > KEY_STEP_TOL {
                chosen_k = Some(k);
                break;
            }
        }
        let span = system.span_at(x, DEFAULT_RANK_TOL)?;
        all_span &= span.spans;
        samples.push(SampleOutcome {
            x: span.x,
            chosen_k,
            rank: span.rank,
            verdict: if span.spans {
                SampleVerdict::Spans
            } else {
                SampleVerdict::Deficient
            },
        });
    }
    Ok(ControllabilityReport {
        hypotheses,
        bundle: Some(bundle.summary()),
        samples,
        verdict: if all_span {
            ControllabilityVerdict::Controllable
        } else {
            ControllabilityVerdict::Undetermined
        },
    })
}
