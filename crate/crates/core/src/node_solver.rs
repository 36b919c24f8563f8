//! Node-function coefficients and the system determinant.
//!
//! Three independent routes produce `d_{-n..=n}` for the square system:
//!
//! * [`SolveMethod::Dense`]: pivoted elimination on the full `(2n+1)` system.
//! * [`SolveMethod::Folded`]: the matrix is centrosymmetric and the
//!   right-hand side a palindrome, so the solution is a palindrome too.
//!   Identifying `d_k` with `d_{-k}` leaves `n+1` unknowns and equations.
//! * [`SolveMethod::ClosedForm`]: Cramer's rule after factoring
//!   `q^((j-k)^2) = q^(j^2) q^(-2jk) q^(k^2)` reduces every cofactor to a
//!   Vandermonde minor over the nodes `x_i = q^(-2i)`, `i = -n..=n`:
//!   `d_k = (-1)^k q^(-k^2) W_{mid, k+n+1} / W`.
//!
//! The overdetermined case `m > n` is handled by [`SolveMethod::LeastSquares`].
//!
//! Float results carry an a posteriori error estimate; [`solve_escalating`]
//! doubles the mantissa until the estimate meets the requested accuracy.

use std::fmt;
use std::str::FromStr;

use num::BigRational;

use crate::arithmetic::{
    integer_power, max_abs, BigFloat, PrecisionContext, Scalar, DEFAULT_MAX_BITS,
};
use crate::error::{Error, Result};
use crate::gauss_system::{build_matrix, build_node_rhs, check_q, QSpec, SystemSpec};
use crate::lattice::LatticeVec;
use crate::linalg::{
    householder_least_squares, lu_factor, mat_vec, norm_inf, norm_inf_matrix,
    normal_equations_least_squares, transpose,
};
use crate::vandermonde::{determinant, vdm_det, vdm_minor, MinorIndex, NodeVector};

/// Largest order accepted by [`determinant_elimination`].
pub const ELIMINATION_MAX_ORDER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveMethod {
    Dense,
    Folded,
    ClosedForm,
    LeastSquares,
}

impl SolveMethod {
    pub const SQUARE: [SolveMethod; 3] =
        [SolveMethod::Dense, SolveMethod::Folded, SolveMethod::ClosedForm];

    pub fn name(&self) -> &'static str {
        match self {
            SolveMethod::Dense => "dense",
            SolveMethod::Folded => "folded",
            SolveMethod::ClosedForm => "closed",
            SolveMethod::LeastSquares => "least-squares",
        }
    }
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(SolveMethod::Dense),
            "folded" => Ok(SolveMethod::Folded),
            "closed" | "closed-form" => Ok(SolveMethod::ClosedForm),
            "least-squares" | "lsq" => Ok(SolveMethod::LeastSquares),
            other => Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeterminantMethod {
    ClosedForm,
    Elimination,
}

impl fmt::Display for DeterminantMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeterminantMethod::ClosedForm => "closed",
            DeterminantMethod::Elimination => "elimination",
        })
    }
}

/// `det A = q^exponent * vandermonde_factor` for the square system of order `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantReport<S> {
    pub n: usize,
    pub value: S,
    pub exponent: u64,
    pub vandermonde_factor: S,
    pub method: DeterminantMethod,
}

/// `2n(n+1)(2n+1)/3`, twice `sum_{i=-n}^{n} i^2`.
pub fn determinant_exponent(n: usize) -> u64 {
    let n = n as u128;
    let numerator = 2 * n * (n + 1) * (2 * n + 1);
    debug_assert_eq!(numerator % 3, 0);
    (numerator / 3) as u64
}

/// Nodes `q^(-2i)` for `i = -n..=n`, ascending for `0 < q < 1`.
pub fn closed_form_nodes<S: Scalar>(n: usize, q: &S) -> Result<NodeVector<S>> {
    check_q(q)?;
    let n = n as i64;
    let nodes = (-n..=n)
        .map(|i| integer_power(q, -2 * i))
        .collect::<Result<Vec<_>>>()?;
    NodeVector::new(nodes)
}

pub fn determinant_closed_form<S: Scalar>(n: usize, q: &S) -> Result<DeterminantReport<S>> {
    let nodes = closed_form_nodes(n, q)?;
    let exponent = determinant_exponent(n);
    let prefactor = integer_power(q, exponent_i64(exponent)?)?;
    let vandermonde_factor = vdm_det(&nodes);
    Ok(DeterminantReport {
        n,
        value: prefactor * &vandermonde_factor,
        exponent,
        vandermonde_factor,
        method: DeterminantMethod::ClosedForm,
    })
}

pub fn determinant_elimination<S: Scalar>(n: usize, q: &S) -> Result<DeterminantReport<S>> {
    if n > ELIMINATION_MAX_ORDER {
        return Err(Error::InvalidInput(format!(
            "order {n} exceeds the elimination limit {ELIMINATION_MAX_ORDER}"
        )));
    }
    let a = build_matrix(SystemSpec::square(n), q)?;
    let value = determinant(a.rows())?;
    let exponent = determinant_exponent(n);
    let vandermonde_factor = value.clone() * integer_power(q, -exponent_i64(exponent)?)?;
    Ok(DeterminantReport {
        n,
        value,
        exponent,
        vandermonde_factor,
        method: DeterminantMethod::Elimination,
    })
}

fn exponent_i64(e: u64) -> Result<i64> {
    i64::try_from(e).map_err(|_| Error::InvalidInput(format!("exponent {e} out of range")))
}

/// Acceptance thresholds for a float solve, as base-2 logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Normwise backward error `||A d - y|| / (||A|| ||d|| + ||y||)`; for
    /// least squares `||A^T (A d - y)|| / (||A^T|| (||A|| ||d|| + ||y||))`.
    pub log2_backward: f64,
    /// Estimated relative forward error of `d`.
    pub log2_forward: f64,
}

impl Tolerance {
    /// Backward error `2^(32-bits)`, forward error `2^(16-bits)`.
    pub fn for_bits(bits: usize) -> Self {
        Tolerance {
            log2_backward: 32.0 - bits as f64,
            log2_forward: 16.0 - bits as f64,
        }
    }

    /// Default tolerance at the working precision of `proto`.
    pub fn for_scalar<S: Scalar>(proto: &S) -> Self {
        match proto.context().mantissa_bits() {
            Some(bits) => Tolerance::for_bits(bits),
            None => Tolerance {
                log2_backward: f64::NEG_INFINITY,
                log2_forward: f64::NEG_INFINITY,
            },
        }
    }
}

/// Solved coefficients `d_{-n..=n}` together with their quality measures.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCoefficients<S> {
    pub spec: SystemSpec,
    pub q: S,
    pub method: SolveMethod,
    pub d: LatticeVec<S>,
    pub precision: PrecisionContext,
    /// `max_j |sum_k d_k q^((j-k)^2) - delta_{0j}|` over all `2m+1` nodes.
    pub residual_inf: S,
    /// Sum of squared node residuals.
    pub residual_sq: S,
    /// `None` when the quantity is exactly zero (exact mode).
    pub log2_backward_error: Option<f64>,
    pub log2_forward_error: Option<f64>,
    pub log2_condition: Option<f64>,
}

impl<S: Scalar> NodeCoefficients<S> {
    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn get(&self, k: i64) -> Option<&S> {
        self.d.get(k)
    }

    /// `d_k == d_{-k}` exactly.
    pub fn is_palindrome(&self) -> bool {
        self.d.is_palindrome()
    }

    /// Largest `|d_k - d_{-k}| / max|d|`.
    pub fn palindrome_defect(&self) -> S {
        let scale = max_abs(&self.q, self.d.values());
        let n = self.n() as i64;
        let defect = (1..=n).fold(self.q.zero_like(), |acc, k| {
            let diff = (self.d.get(k).unwrap().clone() - self.d.get(-k).unwrap()).abs();
            if diff > acc {
                diff
            } else {
                acc
            }
        });
        if scale.is_zero() {
            defect
        } else {
            defect / scale
        }
    }

    /// `sign(d_k) == (-1)^k` for every `k`.
    pub fn has_alternating_signs(&self) -> bool {
        self.d.iter().all(|(k, v)| {
            !v.is_zero() && (v.is_negative() == (k.rem_euclid(2) == 1))
        })
    }

    /// Checks the quality measures against `tol`.
    pub fn verify(self, tol: &Tolerance) -> Result<Self> {
        if self.precision.is_exact() {
            if self.spec.is_square() && !self.residual_inf.is_zero() {
                return Err(Error::Singular(format!(
                    "exact solve left residual {}",
                    self.residual_inf.to_decimal_string()
                )));
            }
            return Ok(self);
        }
        let backward_ok = self
            .log2_backward_error
            .is_none_or(|e| e <= tol.log2_backward);
        let forward_ok = self
            .log2_forward_error
            .is_none_or(|e| e <= tol.log2_forward);
        if backward_ok && forward_ok {
            Ok(self)
        } else {
            Err(self.exhausted())
        }
    }

    fn exhausted(&self) -> Error {
        Error::PrecisionExhausted {
            bits: self.precision.mantissa_bits().unwrap_or(0),
            residual: self.residual_inf.to_decimal_string(),
            log2_backward_error: self.log2_backward_error,
            log2_forward_error: self.log2_forward_error,
        }
    }
}

fn log2_or_none<S: Scalar>(x: &S) -> Option<f64> {
    x.log2_abs()
}

/// Fills in residuals and error estimates for `d` on the full system.
/// `forward_factor` multiplies the unit roundoff to give the forward estimate.
fn finish<S: Scalar>(
    spec: SystemSpec,
    q: &S,
    method: SolveMethod,
    d: Vec<S>,
    forward_factor: Option<S>,
) -> Result<NodeCoefficients<S>> {
    let a = build_matrix(spec, q)?;
    let y = build_node_rhs(spec, q);
    let residual: Vec<S> = mat_vec(a.rows(), &d)
        .into_iter()
        .zip(y.values())
        .map(|(ad, yj)| ad - yj)
        .collect();
    let residual_inf = norm_inf(q, &residual);
    let residual_sq = residual
        .iter()
        .fold(q.zero_like(), |s, r| s + r.clone() * r);
    let precision = q.context();
    let (log2_backward_error, log2_forward_error, log2_condition) =
        match precision.mantissa_bits() {
            None => (None, None, None),
            Some(bits) => {
                let norm_a = norm_inf_matrix(a.rows());
                let scale = norm_a.clone() * norm_inf(q, &d) + q.one_like();
                let backward = if spec.is_square() {
                    log2_or_none(&(residual_inf.clone() / scale))
                } else {
                    // at a least-squares optimum A^T r vanishes, not r
                    let at = transpose(a.rows());
                    let gradient = norm_inf(q, &mat_vec(&at, &residual));
                    log2_or_none(&(gradient / (norm_inf_matrix(&at) * scale)))
                };
                let factor = forward_factor.as_ref().and_then(log2_or_none);
                (backward, factor.map(|f| f - bits as f64), factor)
            }
        };
    Ok(NodeCoefficients {
        spec,
        q: q.clone(),
        method,
        d: LatticeVec::centered(spec.n(), d)?,
        precision,
        residual_inf,
        residual_sq,
        log2_backward_error,
        log2_forward_error,
        log2_condition,
    })
}

fn require_square(spec: SystemSpec, method: SolveMethod) -> Result<()> {
    if !spec.is_square() {
        return Err(Error::InvalidInput(format!(
            "the {method} solver needs m = n, got n = {}, m = {}",
            spec.n(),
            spec.m()
        )));
    }
    Ok(())
}

/// Pivoted elimination on the full square system. Not verified.
pub fn dense_coefficients<S: Scalar>(spec: SystemSpec, q: &S) -> Result<NodeCoefficients<S>> {
    require_square(spec, SolveMethod::Dense)?;
    let a = build_matrix(spec, q)?;
    let y = build_node_rhs(spec, q);
    let norm_a = norm_inf_matrix(a.rows());
    let lu = lu_factor(a.into_rows())?;
    let d = lu.solve(y.values());
    let factor = (!S::EXACT).then(|| {
        q.from_i64_like(spec.cols() as i64) * norm_a * lu.inverse_norm_inf()
    });
    finish(spec, q, SolveMethod::Dense, d, factor)
}

/// The `(n+1) x (n+1)` system over `(d_0, ..., d_n)`, rows `j = 0..=n`.
pub fn folded_matrix<S: Scalar>(n: usize, q: &S) -> Result<Vec<Vec<S>>> {
    folded_rows(n, n, q)
}

/// Folded rows `j = 0..=m`: `F[j][0] = q^(j^2)`, `F[j][k] = q^((j-k)^2) + q^((j+k)^2)`.
fn folded_rows<S: Scalar>(n: usize, m: usize, q: &S) -> Result<Vec<Vec<S>>> {
    check_q(q)?;
    let max_distance = (n + m) as i64;
    let powers: Vec<S> = (0..=max_distance)
        .map(|dist| integer_power(q, dist * dist))
        .collect::<Result<_>>()?;
    Ok((0..=m as i64)
        .map(|j| {
            (0..=n as i64)
                .map(|k| {
                    if k == 0 {
                        powers[j as usize].clone()
                    } else {
                        powers[(j - k).unsigned_abs() as usize].clone()
                            + &powers[(j + k) as usize]
                    }
                })
                .collect()
        })
        .collect())
}

fn unfold<S: Scalar>(half: &[S]) -> Vec<S> {
    half.iter().rev().chain(half[1..].iter()).cloned().collect()
}

/// Pivots of the folded system, in elimination order.
pub fn folded_pivots<S: Scalar>(n: usize, q: &S) -> Result<Vec<S>> {
    Ok(lu_factor(folded_matrix(n, q)?)?.pivots())
}

/// Solves the half-size palindromic system and expands it. Not verified.
pub fn folded_coefficients<S: Scalar>(spec: SystemSpec, q: &S) -> Result<NodeCoefficients<S>> {
    require_square(spec, SolveMethod::Folded)?;
    let n = spec.n();
    let f = folded_matrix(n, q)?;
    let norm_f = norm_inf_matrix(&f);
    let lu = lu_factor(f)?;
    let mut rhs = vec![q.zero_like(); n + 1];
    rhs[0] = q.one_like();
    let half = lu.solve(&rhs);
    let factor = (!S::EXACT)
        .then(|| q.from_i64_like(n as i64 + 1) * norm_f * lu.inverse_norm_inf());
    finish(spec, q, SolveMethod::Folded, unfold(&half), factor)
}

/// Explicit Vandermonde ratios. Not verified.
pub fn closed_form_coefficients<S: Scalar>(n: usize, q: &S) -> Result<NodeCoefficients<S>> {
    let nodes = closed_form_nodes(n, q)?;
    let size = nodes.len();
    let w = vdm_det(&nodes);
    let middle = n + 1;
    let d = (-(n as i64)..=n as i64)
        .map(|k| {
            let col = (k + n as i64) as usize + 1;
            let minor = vdm_minor(&nodes, MinorIndex::new(middle, col, size)?)?;
            let sign = if k.rem_euclid(2) == 1 { -q.one_like() } else { q.one_like() };
            Ok(sign * integer_power(q, -k * k)? * minor / &w)
        })
        .collect::<Result<Vec<S>>>()?;
    let factor = (!S::EXACT).then(|| closed_form_error_factor(&nodes));
    finish(SystemSpec::square(n), q, SolveMethod::ClosedForm, d, factor)
}

/// First-order rounding amplification of the Vandermonde ratio: the node
/// differences lose `(|x_i| + |x_j|) / |x_i - x_j|`; the symmetric sums have
/// positive terms only.
fn closed_form_error_factor<S: Scalar>(nodes: &NodeVector<S>) -> S {
    let x = nodes.as_slice();
    let size = x.len() as i64;
    let proto = &x[0];
    let mut worst = proto.one_like();
    for (i, xi) in x.iter().enumerate() {
        for xj in &x[..i] {
            let amplification = (xi.abs() + xj.abs()) / (xi.clone() - xj).abs();
            if amplification > worst {
                worst = amplification;
            }
        }
    }
    proto.from_i64_like(size * size) * worst + proto.from_i64_like(4 * size)
}

/// Overdetermined least squares over palindromic `d`. Not verified.
///
/// The residual is symmetric in `j`, so only rows `j = 0..=m` are kept, with
/// rows `j >= 1` counted twice. Exact mode uses the weighted normal
/// equations; float mode a Householder factorization.
pub fn least_squares_coefficients<S: Scalar>(
    spec: SystemSpec,
    q: &S,
) -> Result<NodeCoefficients<S>> {
    if spec.is_square() {
        return dense_coefficients(spec, q);
    }
    let (n, m) = (spec.n(), spec.m());
    let rows = folded_rows(n, m, q)?;
    let mut rhs = vec![q.zero_like(); m + 1];
    rhs[0] = q.one_like();
    let two = q.from_i64_like(2);
    let fit = if S::EXACT {
        let weights: Vec<S> = (0..=m)
            .map(|j| if j == 0 { q.one_like() } else { two.clone() })
            .collect();
        normal_equations_least_squares(&rows, &weights, &rhs)?
    } else {
        let root_two = two.sqrt()?;
        let scaled: Vec<Vec<S>> = rows
            .iter()
            .enumerate()
            .map(|(j, row)| {
                row.iter()
                    .map(|v| if j == 0 { v.clone() } else { v.clone() * &root_two })
                    .collect()
            })
            .collect();
        householder_least_squares(scaled, rhs)?
    };
    let d = unfold(&fit.x);
    let partial = finish(spec, q, SolveMethod::LeastSquares, d, None)?;
    if S::EXACT {
        return Ok(partial);
    }
    // forward sensitivity of least squares: kappa + kappa^2 tan(theta)
    let kappa = fit.condition;
    let explained = q.one_like() - &partial.residual_sq;
    let tan_theta = if explained.is_zero() || explained.is_negative() {
        q.one_like()
    } else {
        (partial.residual_sq.clone() / explained).sqrt()?
    };
    let factor = q.from_i64_like(n as i64 + 1) * (kappa.clone() + kappa.clone() * &kappa * tan_theta);
    let log2_factor = factor.log2_abs();
    let bits = partial.precision.mantissa_bits().unwrap_or(0) as f64;
    Ok(NodeCoefficients {
        log2_forward_error: log2_factor.map(|f| f - bits),
        log2_condition: log2_factor,
        ..partial
    })
}

/// Fixed-precision solve by `method` without verification.
pub fn compute<S: Scalar>(
    method: SolveMethod,
    spec: SystemSpec,
    q: &S,
) -> Result<NodeCoefficients<S>> {
    match method {
        SolveMethod::Dense => dense_coefficients(spec, q),
        SolveMethod::Folded => folded_coefficients(spec, q),
        SolveMethod::ClosedForm => {
            require_square(spec, method)?;
            closed_form_coefficients(spec.n(), q)
        }
        SolveMethod::LeastSquares => least_squares_coefficients(spec, q),
    }
}

/// Fixed-precision solve by `method`, verified against `tol`.
pub fn solve<S: Scalar>(
    method: SolveMethod,
    spec: SystemSpec,
    q: &S,
    tol: &Tolerance,
) -> Result<NodeCoefficients<S>> {
    compute(method, spec, q)?.verify(tol)
}

pub fn solve_dense<S: Scalar>(spec: SystemSpec, q: &S, tol: &Tolerance) -> Result<NodeCoefficients<S>> {
    solve(SolveMethod::Dense, spec, q, tol)
}

pub fn solve_folded<S: Scalar>(spec: SystemSpec, q: &S, tol: &Tolerance) -> Result<NodeCoefficients<S>> {
    solve(SolveMethod::Folded, spec, q, tol)
}

pub fn solve_closed_form<S: Scalar>(n: usize, q: &S, tol: &Tolerance) -> Result<NodeCoefficients<S>> {
    solve(SolveMethod::ClosedForm, SystemSpec::square(n), q, tol)
}

pub fn solve_least_squares<S: Scalar>(
    spec: SystemSpec,
    q: &S,
    tol: &Tolerance,
) -> Result<NodeCoefficients<S>> {
    solve(SolveMethod::LeastSquares, spec, q, tol)
}

/// Precision doubling policy for float solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Escalation {
    pub start_bits: usize,
    pub max_bits: usize,
    /// Required `log2` of the relative forward error estimate.
    pub target_log2_error: f64,
}

impl Escalation {
    /// Starts at `start_bits`, caps at the default limit, and asks for the
    /// accuracy the start width would be expected to deliver, `2^(16-start)`.
    pub fn new(start_bits: usize) -> Self {
        Escalation {
            start_bits,
            max_bits: DEFAULT_MAX_BITS.max(start_bits),
            target_log2_error: 16.0 - start_bits as f64,
        }
    }

    /// No retries: the solve runs once at `start_bits`.
    pub fn fixed(start_bits: usize) -> Self {
        Escalation {
            max_bits: start_bits,
            ..Escalation::new(start_bits)
        }
    }

    pub fn with_max_bits(self, max_bits: usize) -> Self {
        Escalation { max_bits, ..self }
    }

    pub fn with_target(self, target_log2_error: f64) -> Self {
        Escalation {
            target_log2_error,
            ..self
        }
    }

    /// Widths tried, in order; empty when the start exceeds the cap.
    pub fn schedule(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(Some(self.start_bits), |b| b.checked_mul(2))
            .take_while(move |&b| b <= self.max_bits)
    }
}

/// Float solve that doubles the mantissa until the error estimate meets the target.
pub fn solve_escalating(
    method: SolveMethod,
    spec: SystemSpec,
    source: &QSpec,
    policy: &Escalation,
) -> Result<NodeCoefficients<BigFloat>> {
    let mut last = None;
    for bits in policy.schedule() {
        let q = source.float_q(bits)?;
        let tol = Tolerance {
            log2_backward: 32.0 - bits as f64,
            log2_forward: policy.target_log2_error,
        };
        match solve(method, spec, &q, &tol) {
            Ok(found) => return Ok(found),
            Err(err @ Error::PrecisionExhausted { .. }) => last = Some(err),
            Err(err) => return Err(err),
        }
    }
    Err(last.unwrap_or_else(|| {
        Error::InvalidInput(format!(
            "start width {} exceeds the cap {}",
            policy.start_bits, policy.max_bits
        ))
    }))
}

/// Exact solve when `q` is rational.
pub fn solve_exact(
    method: SolveMethod,
    spec: SystemSpec,
    source: &QSpec,
) -> Result<NodeCoefficients<BigRational>> {
    let q = source.exact_q()?;
    let tol = Tolerance::for_scalar(&q);
    solve(method, spec, &q, &tol)
}
