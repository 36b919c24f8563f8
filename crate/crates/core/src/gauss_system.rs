//! Assembly of the truncated node system `A d = y`.
//!
//! Rows are nodes `j in -m..=m`, columns are shifts `k in -n..=n`, and
//! `A[j][k] = q^((j-k)^2)` with `q = exp(-1 / (2 sigma^2))`.

use std::fmt;

use num::{BigRational, One, Signed, Zero};

use crate::arithmetic::{
    float_to_rational, integer_power, rational_to_float, BigFloat, PrecisionContext, Scalar,
};
use crate::error::{Error, Result};
use crate::lattice::LatticeVec;

const SIGMA_GUARD_BITS: usize = 32;

/// How the shift parameter was supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QSpec {
    /// `q` given directly as a rational in `(0, 1)`.
    Ratio(BigRational),
    /// The standard deviation `sigma > 0`; `q` is irrational.
    Sigma(BigRational),
}

impl QSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            QSpec::Ratio(q) => {
                if !q.is_positive() || *q >= BigRational::one() {
                    return Err(Error::Domain(format!("q = {q} is outside (0, 1)")));
                }
            }
            QSpec::Sigma(s) => {
                if !s.is_positive() {
                    return Err(Error::Domain(format!("sigma = {s} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// `q` as an exact rational; only possible for [`QSpec::Ratio`].
    pub fn exact_q(&self) -> Result<BigRational> {
        self.validate()?;
        match self {
            QSpec::Ratio(q) => Ok(q.clone()),
            QSpec::Sigma(_) => Err(Error::ExactMode(
                "q = exp(-1/(2 sigma^2)) is irrational; supply q as a ratio".into(),
            )),
        }
    }

    /// `q` rounded to `bits` of mantissa.
    pub fn float_q(&self, bits: usize) -> Result<BigFloat> {
        self.validate()?;
        let ctx = PrecisionContext::big_float(bits)?;
        match self {
            QSpec::Ratio(q) => Ok(rational_to_float(q, bits)),
            QSpec::Sigma(s) => q_from_sigma(&rational_to_float(s, bits + SIGMA_GUARD_BITS), &ctx),
        }
    }

    /// `q` in the number system of `S`, at the width given by `ctx`.
    pub fn q_in<S: Scalar>(&self, ctx: &PrecisionContext) -> Result<S> {
        let q = match ctx.mantissa_bits() {
            None => self.exact_q()?,
            // the float is a dyadic rational, so this round trip is lossless
            Some(bits) => float_to_rational(&self.float_q(bits)?),
        };
        S::from_ratio_in(q.numer(), q.denom(), ctx)
    }
}

impl fmt::Display for QSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QSpec::Ratio(q) => write!(f, "q={q}"),
            QSpec::Sigma(s) => write!(f, "sigma={s}"),
        }
    }
}

/// The pair `(sigma, q)`; `sigma` is absent when `q` was supplied directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftParameter<S> {
    pub source: QSpec,
    pub q: S,
}

impl ShiftParameter<BigRational> {
    pub fn exact(source: QSpec) -> Result<Self> {
        let q = source.exact_q()?;
        Ok(ShiftParameter { source, q })
    }
}

impl ShiftParameter<BigFloat> {
    pub fn float(source: QSpec, bits: usize) -> Result<Self> {
        let q = source.float_q(bits)?;
        Ok(ShiftParameter { source, q })
    }
}

/// `q = exp(-1 / (2 sigma^2))`, rounded to the context width.
pub fn q_from_sigma(sigma: &BigFloat, ctx: &PrecisionContext) -> Result<BigFloat> {
    let bits = ctx.mantissa_bits().ok_or_else(|| {
        Error::ExactMode("q = exp(-1/(2 sigma^2)) is irrational".into())
    })?;
    if Scalar::is_zero(sigma) || Scalar::is_negative(sigma) || sigma.repr().is_infinite() {
        return Err(Error::Domain("sigma must be positive".into()));
    }
    let work = bits + SIGMA_GUARD_BITS;
    let s = sigma.clone().with_precision(work).value();
    let one = s.one_like();
    let exponent = -(one / (s.from_i64_like(2) * &s * &s));
    Ok(exponent.exp().with_precision(bits).value())
}

/// Truncation orders: unknowns `d_{-n..=n}`, equations at nodes `-m..=m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemSpec {
    n: usize,
    m: usize,
}

impl SystemSpec {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < n {
            return Err(Error::InvalidInput(format!(
                "node half-width m = {m} must be at least n = {n}"
            )));
        }
        Ok(SystemSpec { n, m })
    }

    pub fn square(n: usize) -> Self {
        SystemSpec { n, m: n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_square(&self) -> bool {
        self.n == self.m
    }

    pub fn rows(&self) -> usize {
        2 * self.m + 1
    }

    pub fn cols(&self) -> usize {
        2 * self.n + 1
    }
}

pub(crate) fn check_q<S: Scalar>(q: &S) -> Result<()> {
    if q.is_zero() || q.is_negative() || *q >= q.one_like() {
        return Err(Error::Domain(format!(
            "q = {} is outside (0, 1)",
            q.to_decimal_string()
        )));
    }
    Ok(())
}

/// The `(2m+1) x (2n+1)` matrix `q^((j-k)^2)` in centered indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussMatrix<S> {
    spec: SystemSpec,
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> GaussMatrix<S> {
    pub fn spec(&self) -> SystemSpec {
        self.spec
    }

    /// Entry at node `j` and shift `k`.
    pub fn get(&self, j: i64, k: i64) -> Option<&S> {
        let (m, n) = (self.spec.m as i64, self.spec.n as i64);
        if j.abs() > m || k.abs() > n {
            return None;
        }
        Some(&self.rows[(j + m) as usize][(k + n) as usize])
    }

    /// Row-major storage, row 0 is node `-m`.
    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<S>> {
        self.rows
    }
}

/// Builds `A[j][k] = q^((j-k)^2)` from exact integer powers of `q`.
pub fn build_matrix<S: Scalar>(spec: SystemSpec, q: &S) -> Result<GaussMatrix<S>> {
    check_q(q)?;
    let (n, m) = (spec.n as i64, spec.m as i64);
    // powers q^(d^2) for every distance that occurs
    let max_distance = (n + m) as usize;
    let powers: Vec<S> = (0..=max_distance as i64)
        .map(|d| integer_power(q, d * d))
        .collect::<Result<_>>()?;
    let rows = (-m..=m)
        .map(|j| {
            (-n..=n)
                .map(|k| powers[(j - k).unsigned_abs() as usize].clone())
                .collect()
        })
        .collect();
    Ok(GaussMatrix { spec, rows })
}

/// The centered unit vector `y_j = delta_{0j}` of length `2m+1`.
pub fn build_node_rhs<S: Scalar>(spec: SystemSpec, proto: &S) -> LatticeVec<S> {
    let m = spec.m as i64;
    let values = (-m..=m)
        .map(|j| if j == 0 { proto.one_like() } else { proto.zero_like() })
        .collect();
    LatticeVec::centered(spec.m, values).expect("length matches by construction")
}

/// Alias used where the right-hand side is meant.
pub type RhsVector<S> = LatticeVec<S>;

impl QSpec {
    /// Parses `q` given as a ratio or decimal.
    pub fn parse_q(text: &str) -> Result<Self> {
        let q = crate::arithmetic::parse_rational(text)?;
        let spec = QSpec::Ratio(q);
        spec.validate()?;
        Ok(spec)
    }

    /// Parses `sigma` given as a ratio or decimal.
    pub fn parse_sigma(text: &str) -> Result<Self> {
        let s = crate::arithmetic::parse_rational(text)?;
        if Zero::is_zero(&s) {
            return Err(Error::Domain("sigma must be positive".into()));
        }
        let spec = QSpec::Sigma(s);
        spec.validate()?;
        Ok(spec)
    }
}
