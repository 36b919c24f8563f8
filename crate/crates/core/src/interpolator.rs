//! Interpolation of integer samples with the node function.
//!
//! `H(x) = sum_k d_k q^((x-k)^2)` and the interpolant
//! `f~(x) = sum_l f(l) H(x - l)` can be rearranged with `j = l + k` into
//! `sum_j f_j q^((x-j)^2)`, `f_j = sum_k f(j - k) d_k`. Samples outside the
//! window count as zero, which keeps the rearrangement exact.
//!
//! At `x = a/b` every Gaussian term is a power of `t = q^(1/b^2)`:
//! `q^((x-k)^2) = t^((a - kb)^2)`. A [`GaussianExpansion`] collects the
//! coefficients of those powers, so two evaluation orders can be compared
//! exactly even when `q^((x-k)^2)` is irrational.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use num::{BigInt, BigRational, One};

use crate::arithmetic::{max_abs, BigFloat, Scalar};
use crate::error::{Error, Result};
use crate::gauss_system::SystemSpec;
use crate::lattice::LatticeVec;
use crate::node_solver::{NodeCoefficients, SolveMethod};

/// Samples `f(l)` on a contiguous integer range.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow<S> {
    samples: LatticeVec<S>,
}

impl<S: Scalar> SampleWindow<S> {
    pub fn new(lo: i64, values: Vec<S>) -> Result<Self> {
        Ok(SampleWindow {
            samples: LatticeVec::new(lo, values)?,
        })
    }

    /// Window over `-half..=half`.
    pub fn centered(half: usize, values: Vec<S>) -> Result<Self> {
        Ok(SampleWindow {
            samples: LatticeVec::centered(half, values)?,
        })
    }

    /// Builds a window from `(index, value)` pairs in any order. Indices must
    /// form a contiguous range without repeats.
    pub fn from_pairs(mut pairs: Vec<(i64, S)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("no samples".into()));
        }
        pairs.sort_by_key(|(i, _)| *i);
        for w in pairs.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            if a == b {
                return Err(Error::InvalidInput(format!("duplicate sample index {a}")));
            }
            if b != a + 1 {
                return Err(Error::InvalidInput(format!(
                    "sample indices jump from {a} to {b}"
                )));
            }
        }
        let lo = pairs[0].0;
        SampleWindow::new(lo, pairs.into_iter().map(|(_, v)| v).collect())
    }

    /// Unit impulse at `index`.
    pub fn impulse(index: i64, proto: &S) -> Self {
        SampleWindow {
            samples: LatticeVec::new(index, vec![proto.one_like()]).expect("one sample"),
        }
    }

    pub fn lo(&self) -> i64 {
        self.samples.lo()
    }

    pub fn hi(&self) -> i64 {
        self.samples.hi()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `N` when the window is `-N..=N`.
    pub fn half_width(&self) -> Option<usize> {
        (self.lo() == -self.hi()).then(|| self.hi() as usize)
    }

    pub fn samples(&self) -> &LatticeVec<S> {
        &self.samples
    }

    /// `f(l)`, zero outside the window.
    pub fn sample(&self, l: i64) -> S {
        self.samples
            .get(l)
            .cloned()
            .unwrap_or_else(|| self.proto().zero_like())
    }

    pub fn is_palindrome(&self) -> bool {
        self.samples.is_palindrome()
    }

    pub fn scaled(&self, factor: &S) -> Self {
        SampleWindow {
            samples: self.samples.map(|v| v.clone() * factor),
        }
    }

    fn proto(&self) -> &S {
        &self.samples.values()[0]
    }
}

/// `f_k` for the rearranged series, with the solve that produced the `d_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients<S> {
    pub coefficients: LatticeVec<S>,
    pub q: S,
    pub method: SolveMethod,
    pub spec: SystemSpec,
}

impl<S: Scalar> SeriesCoefficients<S> {
    pub fn get(&self, k: i64) -> Option<&S> {
        self.coefficients.get(k)
    }
}

/// Integer nodes where the interpolant is guaranteed to reproduce samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuaranteedRegion {
    bounds: Option<(i64, i64)>,
}

impl GuaranteedRegion {
    pub fn range(&self) -> Option<RangeInclusive<i64>> {
        self.bounds.map(|(lo, hi)| lo..=hi)
    }

    pub fn bounds(&self) -> Option<(i64, i64)> {
        self.bounds
    }

    pub fn contains(&self, x: i64) -> bool {
        self.bounds.is_some_and(|(lo, hi)| lo <= x && x <= hi)
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_none()
    }

    pub fn nodes(&self) -> Vec<i64> {
        self.range().map_or_else(Vec::new, |r| r.collect())
    }
}

/// Nodes `x0` with `|x0 - l| <= m` for every sample index `l`, i.e. the
/// window lies inside `[x0 - m, x0 + m]`.
pub fn certify_region<S: Scalar>(window: &SampleWindow<S>, spec: SystemSpec) -> GuaranteedRegion {
    let m = spec.m() as i64;
    let (lo, hi) = (window.hi() - m, window.lo() + m);
    GuaranteedRegion {
        bounds: (lo <= hi).then_some((lo, hi)),
    }
}

/// `sum_e c_e t^e` with `t = q^(1/scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianExpansion<S> {
    scale: BigInt,
    terms: BTreeMap<BigInt, S>,
}

impl<S: Scalar> GaussianExpansion<S> {
    /// Empty expansion suited to Gaussians centred at integers and evaluated at `x`.
    pub fn at(x: &BigRational) -> Self {
        let b = x.denom();
        GaussianExpansion {
            scale: b * b,
            terms: BTreeMap::new(),
        }
    }

    pub fn scale(&self) -> &BigInt {
        &self.scale
    }

    /// Non-zero coefficients keyed by exponent of `t`.
    pub fn terms(&self) -> &BTreeMap<BigInt, S> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c q^((x-k)^2)` for the `x` this expansion was created for.
    fn add_gaussian(&mut self, x: &BigRational, k: i64, c: &S) {
        // (a/b - k)^2 = (a - kb)^2 / b^2
        let shifted = x.numer() - BigInt::from(k) * x.denom();
        self.add_term(&shifted * &shifted, c.clone());
    }

    fn add_term(&mut self, exponent: BigInt, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&exponent) {
            Some(prev) => {
                let sum = prev + c;
                if !sum.is_zero() {
                    self.terms.insert(exponent, sum);
                }
            }
            None => {
                self.terms.insert(exponent, c);
            }
        }
    }

    /// The same expansion with coefficients rounded to `bits`.
    pub fn to_float(&self, bits: usize) -> GaussianExpansion<BigFloat> {
        GaussianExpansion {
            scale: self.scale.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.to_big_float(bits)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// `sum_e c_e q^(e / scale)`. Exact mode fails on a non-integer power.
    pub fn evaluate(&self, q: &S) -> Result<S> {
        let mut acc = q.zero_like();
        for (e, c) in &self.terms {
            let power = q.pow_rational(&BigRational::new(e.clone(), self.scale.clone()))?;
            acc = acc + power * c;
        }
        Ok(acc)
    }
}

/// `H(x)` as an expansion in powers of `q^(1/b^2)`.
pub fn expand_node_function<S: Scalar>(
    d: &NodeCoefficients<S>,
    x: &BigRational,
) -> GaussianExpansion<S> {
    let mut out = GaussianExpansion::at(x);
    for (k, dk) in d.d.iter() {
        out.add_gaussian(x, k, dk);
    }
    out
}

/// `sum_k f_k q^((x-k)^2)` as an expansion.
pub fn expand_interpolant<S: Scalar>(
    coeffs: &SeriesCoefficients<S>,
    x: &BigRational,
) -> GaussianExpansion<S> {
    let mut out = GaussianExpansion::at(x);
    for (k, fk) in coeffs.coefficients.iter() {
        out.add_gaussian(x, k, fk);
    }
    out
}

/// `sum_l f(l) H(x - l)` as an expansion.
pub fn expand_interpolant_nodesum<S: Scalar>(
    window: &SampleWindow<S>,
    d: &NodeCoefficients<S>,
    x: &BigRational,
) -> GaussianExpansion<S> {
    // shifting x by an integer keeps its denominator, so one scale serves all l
    let mut out = GaussianExpansion::at(x);
    for (l, fl) in window.samples().iter() {
        let shifted = x - BigRational::from_integer(l.into());
        for (k, dk) in d.d.iter() {
            out.add_gaussian(&shifted, k, &(fl.clone() * dk));
        }
    }
    out
}

/// `H(x) = sum_k d_k q^((x-k)^2)`.
pub fn eval_node_function<S: Scalar>(d: &NodeCoefficients<S>, x: &BigRational) -> Result<S> {
    expand_node_function(d, x).evaluate(&d.q)
}

/// `f_k = sum_{j=-n}^{n} f(k-j) d_j` over `k` in `lo-n..=hi+n`.
pub fn series_coefficients<S: Scalar>(
    window: &SampleWindow<S>,
    d: &NodeCoefficients<S>,
) -> SeriesCoefficients<S> {
    let n = d.n() as i64;
    let lo = window.lo() - n;
    let values = (lo..=window.hi() + n)
        .map(|k| {
            d.d.iter()
                .fold(d.q.zero_like(), |acc, (j, dj)| acc + window.sample(k - j) * dj)
        })
        .collect();
    SeriesCoefficients {
        coefficients: LatticeVec::new(lo, values).expect("non-empty range"),
        q: d.q.clone(),
        method: d.method,
        spec: d.spec,
    }
}

/// `sum_k f_k q^((x-k)^2)`.
pub fn eval_interpolant<S: Scalar>(coeffs: &SeriesCoefficients<S>, x: &BigRational) -> Result<S> {
    expand_interpolant(coeffs, x).evaluate(&coeffs.q)
}

/// `sum_l f(l) H(x - l)`.
pub fn eval_interpolant_nodesum<S: Scalar>(
    window: &SampleWindow<S>,
    d: &NodeCoefficients<S>,
    x: &BigRational,
) -> Result<S> {
    expand_interpolant_nodesum(window, d, x).evaluate(&d.q)
}

/// Reproduction error `f~(l) - f(l)` at every sample index, with the
/// certified flag for each node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeReproduction<S> {
    pub index: i64,
    pub error: S,
    pub certified: bool,
}

pub fn node_reproduction<S: Scalar>(
    window: &SampleWindow<S>,
    d: &NodeCoefficients<S>,
) -> Result<Vec<NodeReproduction<S>>> {
    let region = certify_region(window, d.spec);
    window
        .samples()
        .iter()
        .map(|(l, fl)| {
            let x = BigRational::from_integer(l.into());
            let value = eval_interpolant_nodesum(window, d, &x)?;
            Ok(NodeReproduction {
                index: l,
                error: value - fl,
                certified: region.contains(l),
            })
        })
        .collect()
}

/// `(2N+1) * max|f| * residual`: the bound on reproduction error at certified nodes.
pub fn reproduction_bound<S: Scalar>(window: &SampleWindow<S>, d: &NodeCoefficients<S>) -> S {
    let count = d.q.from_i64_like(window.len() as i64);
    count * max_abs(&d.q, window.samples().values()) * &d.residual_inf
}

/// Grid `x_min + i (x_max - x_min) / (count - 1)`; a single point when `count == 1`.
pub fn rational_grid(min: &BigRational, max: &BigRational, count: usize) -> Result<Vec<BigRational>> {
    if count == 0 {
        return Err(Error::InvalidInput("grid needs at least one point".into()));
    }
    if max < min {
        return Err(Error::InvalidInput("grid maximum is below its minimum".into()));
    }
    if count == 1 {
        return Ok(vec![min.clone()]);
    }
    let step = (max - min) / BigRational::from_integer(BigInt::from(count - 1));
    Ok((0..count)
        .map(|i| min + &step * BigRational::from_integer(i.into()))
        .collect())
}

/// Whether `x` is an integer, in which case exact evaluation needs no roots.
pub fn is_integer(x: &BigRational) -> bool {
    x.denom().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::node_solver::{solve, Tolerance};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn exact_d(n: usize, q: BigRational) -> NodeCoefficients<BigRational> {
        let tol = Tolerance::for_scalar(&q);
        solve(SolveMethod::Folded, SystemSpec::square(n), &q, &tol).unwrap()
    }

    #[test]
    fn node_function_examples() {
        let d0 = exact_d(0, rat(1, 2));
        assert_eq!(eval_node_function(&d0, &rat(0, 1)).unwrap(), rat(1, 1));
        let d1 = exact_d(1, rat(1, 2));
        assert_eq!(eval_node_function(&d1, &rat(0, 1)).unwrap(), rat(1, 1));
        assert_eq!(eval_node_function(&d1, &rat(1, 1)).unwrap(), rat(0, 1));
        assert_eq!(eval_node_function(&d1, &rat(-1, 1)).unwrap(), rat(0, 1));
        // beyond the node range: 17/9 q^4 - 8/9 (q^9 + q) at x = 2
        let expected = rat(17, 9) * rat(1, 16) - rat(8, 9) * (rat(1, 512) + rat(1, 2));
        assert_eq!(eval_node_function(&d1, &rat(2, 1)).unwrap(), expected);
        assert!(matches!(
            eval_node_function(&d1, &rat(1, 2)),
            Err(Error::ExactMode(_))
        ));
    }

    #[test]
    fn impulse_series_is_the_node_vector() {
        let d = exact_d(1, rat(1, 2));
        let series = series_coefficients(&SampleWindow::impulse(0, &rat(1, 1)), &d);
        assert_eq!(series.coefficients, d.d);
        assert_eq!(series.method, SolveMethod::Folded);
    }

    #[test]
    fn zero_window_gives_zero_series() {
        let d = exact_d(2, rat(1, 3));
        let w = SampleWindow::centered(2, vec![rat(0, 1); 5]).unwrap();
        let s = series_coefficients(&w, &d);
        assert_eq!(s.coefficients.range(), -4..=4);
        assert!(s.coefficients.values().iter().all(|v| v.is_zero()));
        assert!(expand_interpolant(&s, &rat(1, 3)).is_zero());
    }

    #[test]
    fn constant_window_interior() {
        let d = exact_d(1, rat(1, 2));
        let w = SampleWindow::centered(3, vec![rat(1, 1); 7]).unwrap();
        let s = series_coefficients(&w, &d);
        assert_eq!(s.coefficients.range(), -4..=4);
        for k in -2..=2 {
            assert_eq!(s.get(k).unwrap(), &rat(1, 9));
        }
        // edges see only part of the kernel
        assert_eq!(s.get(3).unwrap(), &(rat(17, 9) - rat(8, 9)));
        assert_eq!(s.get(4).unwrap(), &rat(-8, 9));
    }

    #[test]
    fn linear_window_orders_agree_at_zero() {
        let d = exact_d(2, rat(1, 2));
        let w = SampleWindow::centered(4, (-4..=4).map(|l| rat(l, 1)).collect()).unwrap();
        let s = series_coefficients(&w, &d);
        let a = eval_interpolant(&s, &rat(0, 1)).unwrap();
        let b = eval_interpolant_nodesum(&w, &d, &rat(0, 1)).unwrap();
        assert_eq!(a, b);
        // odd samples around an even kernel
        assert!(a.is_zero());
    }

    #[test]
    fn rearrangement_at_fractional_point() {
        let d = exact_d(2, rat(1, 3));
        let w = SampleWindow::new(-1, vec![rat(2, 1), rat(-1, 2), rat(5, 3)]).unwrap();
        let x = rat(2, 7);
        let s = series_coefficients(&w, &d);
        assert_eq!(expand_interpolant(&s, &x), expand_interpolant_nodesum(&w, &d, &x));
    }

    #[test]
    fn expansion_evaluates_in_float_mode() {
        use crate::arithmetic::{rational_to_float, relative_difference};
        let q = rational_to_float(&rat(1, 4), 128);
        let d = NodeCoefficients {
            d: LatticeVec::centered(0, vec![q.one_like()]).unwrap(),
            ..solve(SolveMethod::Dense, SystemSpec::square(0), &q, &Tolerance::for_bits(128)).unwrap()
        };
        // (1/4)^(1/4) = 1/sqrt(2)
        let h = eval_node_function(&d, &rat(1, 2)).unwrap();
        let expected = Scalar::sqrt(&rational_to_float(&rat(1, 2), 128)).unwrap();
        assert!(relative_difference(&h, &expected).log2_abs().is_none_or(|l| l < -120.0));
    }

    #[test]
    fn region_examples() {
        let spec = |n, m| SystemSpec::new(n, m).unwrap();
        let w = |half: usize| SampleWindow::centered(half, vec![rat(1, 1); 2 * half + 1]).unwrap();
        assert_eq!(certify_region(&w(0), spec(0, 0)).nodes(), vec![0]);
        assert_eq!(certify_region(&w(0), spec(1, 2)).nodes(), vec![-2, -1, 0, 1, 2]);
        assert_eq!(certify_region(&w(2), spec(2, 2)).nodes(), vec![0]);
        assert_eq!(certify_region(&w(1), spec(3, 3)).nodes(), vec![-2, -1, 0, 1, 2]);
        assert!(certify_region(&w(3), spec(2, 2)).is_empty());
        let shifted = SampleWindow::new(5, vec![rat(1, 1); 3]).unwrap();
        assert_eq!(certify_region(&shifted, spec(1, 1)).nodes(), vec![6]);
    }

    #[test]
    fn reproduction_on_certified_nodes() {
        let d = exact_d(3, rat(1, 2));
        let w = SampleWindow::centered(1, vec![rat(3, 1), rat(-2, 1), rat(7, 5)]).unwrap();
        for r in node_reproduction(&w, &d).unwrap() {
            assert!(r.certified);
            assert!(r.error.is_zero(), "index {}", r.index);
        }
        assert!(reproduction_bound(&w, &d).is_zero());
    }

    #[test]
    fn pairs_must_be_contiguous() {
        let ok = SampleWindow::from_pairs(vec![(1, rat(2, 1)), (0, rat(1, 1))]).unwrap();
        assert_eq!((ok.lo(), ok.hi()), (0, 1));
        assert_eq!(ok.sample(1), rat(2, 1));
        assert_eq!(ok.sample(7), rat(0, 1));
        assert!(SampleWindow::from_pairs(vec![(0, rat(1, 1)), (2, rat(1, 1))]).is_err());
        assert!(SampleWindow::from_pairs(vec![(0, rat(1, 1)), (0, rat(1, 1))]).is_err());
        assert!(SampleWindow::<BigRational>::from_pairs(vec![]).is_err());
    }

    #[test]
    fn grid_points() {
        let g = rational_grid(&rat(-1, 1), &rat(1, 1), 5).unwrap();
        assert_eq!(g, vec![rat(-1, 1), rat(-1, 2), rat(0, 1), rat(1, 2), rat(1, 1)]);
        assert_eq!(rational_grid(&rat(3, 1), &rat(3, 1), 1).unwrap(), vec![rat(3, 1)]);
        assert!(rational_grid(&rat(0, 1), &rat(1, 1), 0).is_err());
        assert!(rational_grid(&rat(1, 1), &rat(0, 1), 2).is_err());
    }
}
