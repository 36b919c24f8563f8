//! Number systems used throughout the crate.
//!
//! Every algorithm is written once against the [`Scalar`] trait and runs
//! either on exact rationals ([`BigRational`]) or on binary floating point
//! numbers with a configurable mantissa ([`BigFloat`]). The active mode is
//! described by a [`PrecisionContext`].

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_base::{Abs, EstimatedLog2};
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Binary floating point number with a per-value mantissa width.
pub type BigFloat = FBig<HalfEven, 2>;

pub const MIN_MANTISSA_BITS: usize = 53;
pub const DEFAULT_MANTISSA_BITS: usize = 256;
pub const DEFAULT_MAX_BITS: usize = 4096;

/// Extra bits carried through transcendental evaluations before the final rounding.
const GUARD_BITS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecisionMode {
    ExactRational,
    BigFloat,
}

/// Arithmetic mode threaded through every computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    mode: PrecisionMode,
    mantissa_bits: usize,
}

impl PrecisionContext {
    pub const fn exact() -> Self {
        PrecisionContext {
            mode: PrecisionMode::ExactRational,
            mantissa_bits: 0,
        }
    }

    pub fn big_float(mantissa_bits: usize) -> Result<Self> {
        if mantissa_bits < MIN_MANTISSA_BITS {
            return Err(Error::InvalidInput(format!(
                "mantissa width {mantissa_bits} is below the minimum of {MIN_MANTISSA_BITS} bits"
            )));
        }
        Ok(PrecisionContext {
            mode: PrecisionMode::BigFloat,
            mantissa_bits,
        })
    }

    pub fn mode(&self) -> PrecisionMode {
        self.mode
    }

    pub fn is_exact(&self) -> bool {
        self.mode == PrecisionMode::ExactRational
    }

    /// Mantissa width in bits, `None` in exact mode.
    pub fn mantissa_bits(&self) -> Option<usize> {
        match self.mode {
            PrecisionMode::ExactRational => None,
            PrecisionMode::BigFloat => Some(self.mantissa_bits),
        }
    }

    /// The same mode at twice the mantissa width (exact mode is unchanged).
    pub fn doubled(&self) -> Self {
        match self.mode {
            PrecisionMode::ExactRational => *self,
            PrecisionMode::BigFloat => PrecisionContext {
                mode: PrecisionMode::BigFloat,
                mantissa_bits: self.mantissa_bits * 2,
            },
        }
    }

    // Scalars built by the float backend may carry any width the backend chose.
    fn float_unchecked(mantissa_bits: usize) -> Self {
        PrecisionContext {
            mode: PrecisionMode::BigFloat,
            mantissa_bits,
        }
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::float_unchecked(DEFAULT_MANTISSA_BITS)
    }
}

impl fmt::Display for PrecisionContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            PrecisionMode::ExactRational => f.write_str("exact"),
            PrecisionMode::BigFloat => write!(f, "{}", self.mantissa_bits),
        }
    }
}

impl FromStr for PrecisionContext {
    type Err = Error;

    /// Parses `exact` or a mantissa width in bits.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("exact") {
            return Ok(PrecisionContext::exact());
        }
        let bits: usize = s
            .parse()
            .map_err(|_| Error::InvalidInput(format!("invalid precision `{s}`")))?;
        PrecisionContext::big_float(bits)
    }
}

/// A value in one of the supported number systems.
///
/// Arithmetic is closed: results keep the number system (and for floats the
/// mantissa width) of the operands. Constants are created "like" an existing
/// value so that generic code never needs to know the active mode.
#[allow(clippy::wrong_self_convention)]
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// `true` when every operation is error-free.
    const EXACT: bool;

    /// Builds `num/den` in the number system described by `ctx`.
    fn from_ratio_in(num: &BigInt, den: &BigInt, ctx: &PrecisionContext) -> Result<Self>;

    /// Context this value was computed in.
    fn context(&self) -> PrecisionContext;

    /// Builds `num/den` with the same number system and width as `self`.
    /// `den` must be nonzero.
    fn from_ratio_like(&self, num: &BigInt, den: &BigInt) -> Self;

    fn from_rational_like(&self, r: &BigRational) -> Self {
        self.from_ratio_like(r.numer(), r.denom())
    }

    fn from_i64_like(&self, v: i64) -> Self {
        self.from_ratio_like(&BigInt::from(v), &BigInt::one())
    }

    fn zero_like(&self) -> Self {
        self.from_i64_like(0)
    }

    fn one_like(&self) -> Self {
        self.from_i64_like(1)
    }

    fn is_zero(&self) -> bool;

    fn is_negative(&self) -> bool;

    fn abs(&self) -> Self;

    /// Approximate `log2 |self|`, `None` for zero.
    fn log2_abs(&self) -> Option<f64>;

    fn to_f64(&self) -> f64;

    /// `p/q` in exact mode, a decimal expansion otherwise.
    fn to_decimal_string(&self) -> String;

    /// Rounds to a float with the given mantissa width.
    fn to_big_float(&self, bits: usize) -> BigFloat;

    fn sqrt(&self) -> Result<Self>;

    /// `self^e` for a rational exponent. Exact mode only admits integer exponents.
    fn pow_rational(&self, e: &BigRational) -> Result<Self>;

    /// Determinant by a number-system specific exact method, if one exists.
    fn exact_determinant(_rows: &[Vec<Self>]) -> Option<Self> {
        None
    }
}

/// Builds `num/den` in the requested context.
pub fn scalar_from_rational<S: Scalar>(
    num: impl Into<BigInt>,
    den: impl Into<BigInt>,
    ctx: &PrecisionContext,
) -> Result<S> {
    let (num, den) = (num.into(), den.into());
    if den.is_zero() {
        return Err(Error::InvalidInput("zero denominator".into()));
    }
    S::from_ratio_in(&num, &den, ctx)
}

/// `x^e` by repeated squaring.
pub fn integer_power<S: Scalar>(x: &S, e: i64) -> Result<S> {
    if e < 0 && x.is_zero() {
        return Err(Error::Domain("zero raised to a negative power".into()));
    }
    let mut result = x.one_like();
    let mut base = x.clone();
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            result = result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = base.clone() * &base;
        }
    }
    if e < 0 {
        result = x.one_like() / result;
    }
    Ok(result)
}

/// Largest absolute value, zero for an empty slice.
pub fn max_abs<S: Scalar>(proto: &S, values: &[S]) -> S {
    values.iter().fold(proto.zero_like(), |acc, v| {
        let a = v.abs();
        if a > acc {
            a
        } else {
            acc
        }
    })
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_difference<S: Scalar>(a: &S, b: &S) -> S {
    let diff = (a.clone() - b).abs();
    let scale = if a.abs() > b.abs() { a.abs() } else { b.abs() };
    if scale.is_zero() {
        scale
    } else {
        diff / scale
    }
}

/// Parses an exact rational from `p/q`, an integer, or a decimal such as
/// `-1.25e-3`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::InvalidInput(format!("not a rational or decimal number: `{text}`"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in `{text}`")));
        }
        return Ok(BigRational::new(p, q));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all_digits.parse().map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let factor = BigRational::from_integer(num::pow::pow(
        BigInt::from(10),
        scale.unsigned_abs() as usize,
    ));
    if scale < 0 {
        value /= factor;
    } else {
        value *= factor;
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

fn bigint_log2(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 512 {
        return x.abs().to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap_or(f64::INFINITY).log2() + shift as f64
}

pub(crate) fn bigint_to_ibig(x: &BigInt) -> IBig {
    IBig::from_le_bytes(&x.to_signed_bytes_le())
}

pub(crate) fn ibig_to_bigint(x: &IBig) -> BigInt {
    BigInt::from_signed_bytes_le(&x.to_le_bytes())
}

/// Rounds `r` to a float with `bits` of mantissa.
pub fn rational_to_float(r: &BigRational, bits: usize) -> BigFloat {
    let work = bits + GUARD_BITS;
    let num = BigFloat::from(bigint_to_ibig(r.numer()))
        .with_precision(work)
        .value();
    let den = BigFloat::from(bigint_to_ibig(r.denom()))
        .with_precision(work)
        .value();
    (num / den).with_precision(bits).value()
}

/// The exact rational value of a float.
pub fn float_to_rational(x: &BigFloat) -> BigRational {
    let repr = x.repr();
    let significand = ibig_to_bigint(repr.significand());
    let exponent = repr.exponent();
    let two = BigInt::from(2);
    if exponent >= 0 {
        BigRational::from_integer(significand * num::pow::pow(two, exponent as usize))
    } else {
        BigRational::new(significand, num::pow::pow(two, exponent.unsigned_abs()))
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio_in(num: &BigInt, den: &BigInt, ctx: &PrecisionContext) -> Result<Self> {
        if !ctx.is_exact() {
            return Err(Error::InvalidInput(
                "exact rationals requested in a floating point context".into(),
            ));
        }
        Ok(BigRational::new(num.clone(), den.clone()))
    }

    fn context(&self) -> PrecisionContext {
        PrecisionContext::exact()
    }

    fn from_ratio_like(&self, num: &BigInt, den: &BigInt) -> Self {
        BigRational::new(num.clone(), den.clone())
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn log2_abs(&self) -> Option<f64> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(bigint_log2(self.numer()) - bigint_log2(self.denom()))
        }
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_decimal_string(&self) -> String {
        self.to_string()
    }

    fn to_big_float(&self, bits: usize) -> BigFloat {
        rational_to_float(self, bits)
    }

    fn sqrt(&self) -> Result<Self> {
        if Signed::is_negative(self) {
            return Err(Error::Domain("square root of a negative number".into()));
        }
        let (n, d) = (self.numer().sqrt(), self.denom().sqrt());
        let root = BigRational::new(n, d);
        if &(root.clone() * &root) == self {
            Ok(root)
        } else {
            Err(Error::ExactMode(format!("square root of {self} is irrational")))
        }
    }

    fn pow_rational(&self, e: &BigRational) -> Result<Self> {
        if !e.is_integer() {
            return Err(Error::ExactMode(format!(
                "{self} raised to the non-integer power {e}"
            )));
        }
        let e = e
            .to_integer()
            .to_i64()
            .ok_or_else(|| Error::Domain(format!("exponent {e} out of range")))?;
        integer_power(self, e)
    }

    fn exact_determinant(rows: &[Vec<Self>]) -> Option<Self> {
        Some(rational_determinant(rows))
    }
}

/// Clears denominators row by row and runs fraction-free elimination on integers.
fn rational_determinant(rows: &[Vec<BigRational>]) -> BigRational {
    let mut scale = BigInt::one();
    let integer_rows: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            scale *= &lcm;
            row.iter()
                .map(|v| v.numer() * (&lcm / v.denom()))
                .collect()
        })
        .collect();
    BigRational::new(crate::linalg::bareiss_determinant(integer_rows), scale)
}

impl Scalar for BigFloat {
    const EXACT: bool = false;

    fn from_ratio_in(num: &BigInt, den: &BigInt, ctx: &PrecisionContext) -> Result<Self> {
        let bits = ctx.mantissa_bits().ok_or_else(|| {
            Error::InvalidInput("floating point value requested in exact context".into())
        })?;
        Ok(rational_to_float(
            &BigRational::new(num.clone(), den.clone()),
            bits,
        ))
    }

    fn context(&self) -> PrecisionContext {
        PrecisionContext::float_unchecked(self.precision())
    }

    fn from_ratio_like(&self, num: &BigInt, den: &BigInt) -> Self {
        rational_to_float(&BigRational::new(num.clone(), den.clone()), self.precision())
    }

    fn is_zero(&self) -> bool {
        self.repr().significand() == &dashu_int::IBig::ZERO
    }

    fn is_negative(&self) -> bool {
        self.sign() == dashu_base::Sign::Negative && !Scalar::is_zero(self)
    }

    fn abs(&self) -> Self {
        Abs::abs(self.clone())
    }

    fn log2_abs(&self) -> Option<f64> {
        if Scalar::is_zero(self) {
            None
        } else {
            Some(self.log2_est() as f64)
        }
    }

    fn to_f64(&self) -> f64 {
        FBig::to_f64(self).value()
    }

    fn to_decimal_string(&self) -> String {
        self.to_decimal().value().to_string()
    }

    fn to_big_float(&self, bits: usize) -> BigFloat {
        self.clone().with_precision(bits).value()
    }

    fn sqrt(&self) -> Result<Self> {
        if Scalar::is_negative(self) {
            return Err(Error::Domain("square root of a negative number".into()));
        }
        Ok(FBig::sqrt(self))
    }

    fn pow_rational(&self, e: &BigRational) -> Result<Self> {
        if e.is_integer() {
            if let Some(k) = e.to_integer().to_i64() {
                return integer_power(self, k);
            }
        }
        if Scalar::is_zero(self) {
            return if e.is_positive() {
                Ok(self.clone())
            } else {
                Err(Error::Domain("zero raised to a non-positive power".into()))
            };
        }
        if Scalar::is_negative(self) {
            return Err(Error::Domain(
                "negative base raised to a non-integer power".into(),
            ));
        }
        let bits = self.precision();
        let work = bits + GUARD_BITS;
        let base = self.clone().with_precision(work).value();
        let exponent = rational_to_float(e, work);
        Ok((base.ln() * exponent).exp().with_precision(bits).value())
    }
}
