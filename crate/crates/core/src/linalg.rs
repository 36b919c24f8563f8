//! Dense elimination kernels shared by the determinant and solver paths.
//!
//! Matrices are plain row-major `Vec<Vec<S>>`; sizes here stay small
//! (tens of rows), so clarity wins over blocking.

use num::{BigInt, One, Zero};

use crate::arithmetic::Scalar;
use crate::error::{Error, Result};

/// Determinant of an integer matrix by Bareiss fraction-free elimination.
/// Every intermediate division is exact.
pub(crate) fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let value = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = value;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}

/// LU factors with partial (largest magnitude) pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub(crate) struct Lu<S> {
    lu: Vec<Vec<S>>,
    perm: Vec<usize>,
    odd_permutation: bool,
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn lu_factor<S: Scalar>(mut a: Vec<Vec<S>>) -> Result<Lu<S>> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("matrix is not square".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut odd_permutation = false;
    for k in 0..n {
        let mut best = k;
        let mut best_abs = a[k][k].abs();
        for i in k + 1..n {
            let v = a[i][k].abs();
            if v > best_abs {
                best = i;
                best_abs = v;
            }
        }
        if best_abs.is_zero() {
            return Err(Error::Singular(format!("zero pivot in column {k}")));
        }
        if best != k {
            a.swap(best, k);
            perm.swap(best, k);
            odd_permutation = !odd_permutation;
        }
        let (upper, lower) = a.split_at_mut(k + 1);
        let pivot_row = &upper[k];
        for row in lower.iter_mut() {
            let factor = row[k].clone() / &pivot_row[k];
            for j in k + 1..n {
                let update = factor.clone() * &pivot_row[j];
                row[j] = row[j].clone() - update;
            }
            row[k] = factor;
        }
    }
    Ok(Lu {
        lu: a,
        perm,
        odd_permutation,
    })
}

impl<S: Scalar> Lu<S> {
    pub(crate) fn dim(&self) -> usize {
        self.lu.len()
    }

    pub(crate) fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.dim();
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[i][j].clone() * &x[j];
                x[i] = x[i].clone() - t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[i][j].clone() * &x[j];
                x[i] = x[i].clone() - t;
            }
            x[i] = x[i].clone() / &self.lu[i][i];
        }
        x
    }

    pub(crate) fn pivots(&self) -> Vec<S> {
        (0..self.dim()).map(|i| self.lu[i][i].clone()).collect()
    }

    pub(crate) fn determinant(&self) -> S {
        let mut det = self.lu[0][0].one_like();
        for p in self.pivots() {
            det = det * &p;
        }
        if self.odd_permutation {
            -det
        } else {
            det
        }
    }

    /// `||A^{-1}||_inf` from the explicit inverse.
    pub(crate) fn inverse_norm_inf(&self) -> S {
        let n = self.dim();
        let proto = &self.lu[0][0];
        let mut row_sums = vec![proto.zero_like(); n];
        for col in 0..n {
            let mut e = vec![proto.zero_like(); n];
            e[col] = proto.one_like();
            for (sum, v) in row_sums.iter_mut().zip(self.solve(&e)) {
                *sum = sum.clone() + v.abs();
            }
        }
        max_of(proto, row_sums)
    }
}

/// Determinant by pivoted elimination; zero when a column has no pivot.
pub(crate) fn elimination_determinant<S: Scalar>(a: Vec<Vec<S>>) -> Result<S> {
    if a.is_empty() {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let proto = a[0][0].clone();
    match lu_factor(a) {
        Ok(lu) => Ok(lu.determinant()),
        Err(Error::Singular(_)) => Ok(proto.zero_like()),
        Err(e) => Err(e),
    }
}

fn max_of<S: Scalar>(proto: &S, values: impl IntoIterator<Item = S>) -> S {
    values
        .into_iter()
        .fold(proto.zero_like(), |acc, v| if v > acc { v } else { acc })
}

pub(crate) fn norm_inf_matrix<S: Scalar>(a: &[Vec<S>]) -> S {
    let proto = &a[0][0];
    max_of(
        proto,
        a.iter()
            .map(|row| row.iter().fold(proto.zero_like(), |s, v| s + v.abs())),
    )
}

pub(crate) fn norm_inf<S: Scalar>(proto: &S, v: &[S]) -> S {
    max_of(proto, v.iter().map(|x| x.abs()))
}

pub(crate) fn mat_vec<S: Scalar>(a: &[Vec<S>], x: &[S]) -> Vec<S> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(x[0].zero_like(), |acc, (r, v)| acc + r.clone() * v)
        })
        .collect()
}

pub(crate) fn transpose<S: Scalar>(a: &[Vec<S>]) -> Vec<Vec<S>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Result of a least-squares fit `min ||A x - b||_2`.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquaresFit<S> {
    pub x: Vec<S>,
    /// `||A||_inf * ||A^+||_inf` style estimate for the factor that was inverted.
    pub condition: S,
}

/// Householder QR least squares. Needs square roots, so float only.
pub(crate) fn householder_least_squares<S: Scalar>(
    mut a: Vec<Vec<S>>,
    mut b: Vec<S>,
) -> Result<LeastSquaresFit<S>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows < cols || cols == 0 {
        return Err(Error::InvalidInput(format!(
            "least squares needs rows >= columns > 0, got {rows}x{cols}"
        )));
    }
    let proto = a[0][0].clone();
    let two = proto.from_i64_like(2);
    for k in 0..cols {
        let norm_sq = (k..rows).fold(proto.zero_like(), |s, i| s + a[i][k].clone() * &a[i][k]);
        if norm_sq.is_zero() {
            return Err(Error::Singular(format!("column {k} is rank deficient")));
        }
        let norm = norm_sq.sqrt()?;
        let alpha = if a[k][k].is_negative() { norm } else { -norm };
        let mut v: Vec<S> = (k..rows).map(|i| a[i][k].clone()).collect();
        v[0] = v[0].clone() - &alpha;
        let v_sq = v.iter().fold(proto.zero_like(), |s, x| s + x.clone() * x);
        if v_sq.is_zero() {
            continue;
        }
        let scale = two.clone() / &v_sq;
        for j in k..cols {
            reflect(&v, &scale, a[k..].iter_mut().map(|row| &mut row[j]).collect());
        }
        reflect(&v, &scale, b[k..].iter_mut().collect());
    }

    let r: Vec<Vec<S>> = (0..cols)
        .map(|i| {
            (0..cols)
                .map(|j| if j < i { proto.zero_like() } else { a[i][j].clone() })
                .collect()
        })
        .collect();
    if r.iter().enumerate().any(|(i, row)| row[i].is_zero()) {
        return Err(Error::Singular("triangular factor has a zero diagonal".into()));
    }
    let x = back_substitute(&r, &b[..cols]);
    let mut inv_sums = vec![proto.zero_like(); cols];
    for col in 0..cols {
        let mut e = vec![proto.zero_like(); cols];
        e[col] = proto.one_like();
        for (sum, v) in inv_sums.iter_mut().zip(back_substitute(&r, &e)) {
            *sum = sum.clone() + v.abs();
        }
    }
    let condition = norm_inf_matrix(&r) * max_of(&proto, inv_sums);
    Ok(LeastSquaresFit { x, condition })
}

/// Applies `I - scale * v v^T` to the vector made of `cells`.
fn reflect<S: Scalar>(v: &[S], scale: &S, mut cells: Vec<&mut S>) {
    let dot = v
        .iter()
        .zip(cells.iter())
        .fold(scale.zero_like(), |s, (vi, c)| s + vi.clone() * &**c);
    let factor = scale.clone() * dot;
    for (vi, cell) in v.iter().zip(cells.iter_mut()) {
        **cell = (*cell).clone() - factor.clone() * vi;
    }
}

fn back_substitute<S: Scalar>(r: &[Vec<S>], b: &[S]) -> Vec<S> {
    let n = r.len();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for j in i + 1..n {
            let t = r[i][j].clone() * &x[j];
            x[i] = x[i].clone() - t;
        }
        x[i] = x[i].clone() / &r[i][i];
    }
    x
}

/// Weighted least squares through the normal equations
/// `A^T W A x = A^T W b`, `W = diag(weights)`; exact in rational arithmetic.
pub(crate) fn normal_equations_least_squares<S: Scalar>(
    a: &[Vec<S>],
    weights: &[S],
    b: &[S],
) -> Result<LeastSquaresFit<S>> {
    let at = transpose(a);
    let weighted: Vec<Vec<S>> = at
        .iter()
        .map(|col| col.iter().zip(weights).map(|(x, w)| x.clone() * w).collect())
        .collect();
    let gram: Vec<Vec<S>> = weighted.iter().map(|wi| mat_vec(&at, wi)).collect();
    let rhs = mat_vec(&weighted, b);
    let lu = lu_factor(gram.clone())?;
    let x = lu.solve(&rhs);
    let condition = norm_inf_matrix(&gram) * lu.inverse_norm_inf();
    Ok(LeastSquaresFit { x, condition })
}
