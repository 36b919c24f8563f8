//! Library results checked against independent reference computations that
//! live only in this file: cofactor expansion, subset enumeration, and the
//! unfolded normal equations solved by Gauss-Jordan.

use gauss_cardinal::arithmetic::{rational_to_float, relative_difference};
use gauss_cardinal::gauss_system::build_matrix;
use gauss_cardinal::node_solver::{
    determinant_closed_form, determinant_elimination, least_squares_coefficients, solve, SolveMethod,
};
use gauss_cardinal::vandermonde::{elementary_symmetric, vdm_det, vdm_minor, MinorIndex, NodeVector};
use gauss_cardinal::{BigRational, Scalar, SystemSpec, Tolerance};
use num::{One, Zero};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn cofactor_det(m: &[Vec<BigRational>]) -> BigRational {
    if m.is_empty() {
        return BigRational::one();
    }
    let mut total = BigRational::zero();
    for (col, a) in m[0].iter().enumerate() {
        if Zero::is_zero(a) {
            continue;
        }
        let sub: Vec<Vec<BigRational>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != col)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let term = a * cofactor_det(&sub);
        total = if col % 2 == 0 { total + term } else { total - term };
    }
    total
}

#[allow(clippy::needless_range_loop)]
fn gauss_jordan(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !Zero::is_zero(&a[r][c])).expect("nonsingular");
        a.swap(c, p);
        b.swap(c, p);
        let inv = a[c][c].recip();
        for v in a[c].iter_mut() {
            *v = &*v * &inv;
        }
        b[c] = &b[c] * &inv;
        for r in 0..n {
            if r != c && !Zero::is_zero(&a[r][c]) {
                let f = a[r][c].clone();
                for k in 0..n {
                    let t = &f * &a[c][k];
                    a[r][k] = &a[r][k] - t;
                }
                let t = &f * &b[c];
                b[r] = &b[r] - t;
            }
        }
    }
    b
}

fn q_sweep() -> Vec<BigRational> {
    vec![rat(1, 10), rat(1, 3), rat(1, 2), rat(2, 3), rat(9, 10)]
}

#[test]
fn determinant_paths_match_cofactor_expansion() {
    for q in q_sweep() {
        for n in 0..=3 {
            let a = build_matrix(SystemSpec::square(n), &q).unwrap();
            let reference = cofactor_det(a.rows());
            assert_eq!(determinant_closed_form(n, &q).unwrap().value, reference, "n={n} q={q}");
            assert_eq!(determinant_elimination(n, &q).unwrap().value, reference, "n={n} q={q}");
        }
    }
}

#[test]
fn order_two_prefactor_is_q_to_the_twentieth() {
    let q = rat(1, 3);
    let report = determinant_closed_form(2, &q).unwrap();
    assert_eq!(report.exponent, 20);
    // nodes q^4, q^2, 1, q^-2, q^-4
    let powers: Vec<BigRational> = [4, 2, 0, -2, -4].iter().map(|&e| q.pow(e)).collect();
    let nodes = NodeVector::new(powers).unwrap();
    let reference = q.pow(20) * cofactor_det(&nodes.matrix());
    assert_eq!(report.value, reference);
}

#[test]
fn vandermonde_and_minors_match_cofactor_expansion() {
    let x = NodeVector::new(vec![rat(-3, 2), rat(1, 3), rat(2, 1), rat(5, 7), rat(-1, 4)]).unwrap();
    let full = x.matrix();
    assert_eq!(vdm_det(&x), cofactor_det(&full));
    for l in 1..=5 {
        for k in 1..=5 {
            let sub: Vec<Vec<BigRational>> = full
                .iter()
                .enumerate()
                .filter(|&(r, _)| r + 1 != l)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c + 1 != k)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let idx = MinorIndex::new(l, k, 5).unwrap();
            assert_eq!(vdm_minor(&x, idx).unwrap(), cofactor_det(&sub), "l={l} k={k}");
        }
    }
}

#[test]
fn elementary_symmetric_by_subsets() {
    let values = vec![rat(2, 1), rat(-1, 3), rat(5, 2), rat(7, 1)];
    let x = NodeVector::new(values.clone()).unwrap();
    for r in 0..=5 {
        let mut total = BigRational::zero();
        for mask in 0u32..(1 << values.len()) {
            if mask.count_ones() as usize == r {
                total += (0..values.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .fold(BigRational::one(), |p, i| p * &values[i]);
            }
        }
        assert_eq!(elementary_symmetric(&x, r), total, "r={r}");
    }
}

#[test]
fn closed_form_coefficients_by_cramer() {
    // replace column k of A by e_0 and take the determinant ratio
    for q in [rat(1, 2), rat(2, 3)] {
        for n in 0..=2usize {
            let a = build_matrix(SystemSpec::square(n), &q).unwrap();
            let det = cofactor_det(a.rows());
            let sol = solve(SolveMethod::ClosedForm, SystemSpec::square(n), &q, &Tolerance::for_scalar(&q))
                .unwrap();
            for (col, (_, dk)) in sol.d.iter().enumerate() {
                let replaced: Vec<Vec<BigRational>> = a
                    .rows()
                    .iter()
                    .enumerate()
                    .map(|(r, row)| {
                        let mut row = row.clone();
                        row[col] = if r == n { BigRational::one() } else { BigRational::zero() };
                        row
                    })
                    .collect();
                assert_eq!(dk, &(cofactor_det(&replaced) / &det));
            }
        }
    }
}

fn unfolded_least_squares(n: usize, m: usize, q: &BigRational) -> Vec<BigRational> {
    let a = build_matrix(SystemSpec::new(n, m).unwrap(), q).unwrap();
    let rows = a.rows();
    let cols = 2 * n + 1;
    let gram: Vec<Vec<BigRational>> = (0..cols)
        .map(|i| {
            (0..cols)
                .map(|j| rows.iter().fold(BigRational::zero(), |s, r| s + &r[i] * &r[j]))
                .collect()
        })
        .collect();
    // A^T e_mid is the middle row of A
    let rhs: Vec<BigRational> = (0..cols).map(|i| rows[m][i].clone()).collect();
    gauss_jordan(gram, rhs)
}

#[test]
fn least_squares_matches_unfolded_normal_equations() {
    for (n, m, q) in [(1, 2, rat(1, 2)), (0, 1, rat(1, 3)), (2, 4, rat(2, 3)), (3, 5, rat(1, 2))] {
        let fit = least_squares_coefficients(SystemSpec::new(n, m).unwrap(), &q).unwrap();
        assert_eq!(fit.method, SolveMethod::LeastSquares);
        assert_eq!(fit.d.values(), unfolded_least_squares(n, m, &q).as_slice(), "n={n} m={m}");
        assert!(fit.is_palindrome());
        assert!(!Zero::is_zero(&fit.residual_sq));
    }
}

#[test]
fn float_least_squares_agrees_with_exact_reference() {
    let q = rat(1, 2);
    let reference = unfolded_least_squares(3, 5, &q);
    let qf = rational_to_float(&q, 256);
    let spec = SystemSpec::new(3, 5).unwrap();
    let fit = solve(SolveMethod::LeastSquares, spec, &qf, &Tolerance::for_bits(256)).unwrap();
    for (got, want) in fit.d.values().iter().zip(&reference) {
        let want = rational_to_float(want, 256);
        let err = relative_difference(got, &want).log2_abs().unwrap_or(f64::NEG_INFINITY);
        assert!(err < -200.0, "relative error 2^{err}");
    }
}

#[test]
fn least_squares_residual_settles_as_precision_grows() {
    let q = rat(2, 3);
    let spec = SystemSpec::new(2, 4).unwrap();
    let exact = least_squares_coefficients(spec, &q).unwrap().residual_sq;
    let mut previous: Option<f64> = None;
    for bits in [64usize, 128, 256, 512] {
        let fit = least_squares_coefficients(spec, &rational_to_float(&q, bits)).unwrap();
        let gap = (fit.residual_sq.to_big_float(1024) - rational_to_float(&exact, 1024))
            .log2_abs()
            .unwrap_or(-2048.0);
        // the excess over the optimum can only shrink
        if let Some(p) = previous {
            assert!(gap <= p, "bits={bits}: 2^{gap} after 2^{p}");
        }
        assert!(gap < 20.0 - bits as f64, "bits={bits}: 2^{gap}");
        previous = Some(gap);
    }
}
