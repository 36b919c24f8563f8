//! Vandermonde determinants and their single row/column minors.
//!
//! The Vandermonde matrix of nodes `x_1..x_N` has row `i` equal to
//! `(1, x_i, ..., x_i^(N-1))`. Its determinant is `prod_{i>j} (x_i - x_j)`.
//! Deleting row `l` and the column holding power `k-1` leaves
//! `e_{N-k}(x without x_l) * prod_{i>j; i,j != l} (x_i - x_j)`, where `e_r` is
//! the elementary symmetric polynomial of degree `r`. Both closed forms cost
//! `O(N^2)`; [`brute_force_det`] is the independent elimination oracle.

use crate::arithmetic::Scalar;
use crate::error::{Error, Result};
use crate::linalg::elimination_determinant;

/// Largest matrix accepted by [`brute_force_det`].
pub const BRUTE_FORCE_MAX_DIM: usize = 12;

/// Interpolation nodes `x_1..x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVector<S>(Vec<S>);

impl<S: Scalar> NodeVector<S> {
    pub fn new(nodes: Vec<S>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidInput("node vector is empty".into()));
        }
        Ok(NodeVector(nodes))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    /// Repeated nodes make every Vandermonde determinant vanish.
    pub fn has_duplicates(&self) -> bool {
        self.0
            .iter()
            .enumerate()
            .any(|(i, a)| self.0[i + 1..].iter().any(|b| a == b))
    }

    /// The full `N x N` Vandermonde matrix.
    pub fn matrix(&self) -> Vec<Vec<S>> {
        let n = self.len();
        self.0
            .iter()
            .map(|x| {
                let mut row = Vec::with_capacity(n);
                let mut p = x.one_like();
                for _ in 0..n {
                    row.push(p.clone());
                    p = p * x;
                }
                row
            })
            .collect()
    }
}

/// 1-based row `l` and column `k` (column `k` holds power `k-1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinorIndex {
    pub row: usize,
    pub col: usize,
}

impl MinorIndex {
    pub fn new(row: usize, col: usize, dim: usize) -> Result<Self> {
        if row == 0 || col == 0 || row > dim || col > dim {
            return Err(Error::InvalidInput(format!(
                "minor index ({row}, {col}) outside 1..={dim}"
            )));
        }
        Ok(MinorIndex { row, col })
    }
}

fn difference_product<S: Scalar>(proto: &S, nodes: impl Iterator<Item = S> + Clone) -> S {
    let nodes: Vec<S> = nodes.collect();
    let mut acc = proto.one_like();
    for (i, xi) in nodes.iter().enumerate() {
        for xj in &nodes[..i] {
            acc = acc * (xi.clone() - xj);
        }
    }
    acc
}

/// `prod_{i>j} (x_i - x_j)`.
pub fn vdm_det<S: Scalar>(nodes: &NodeVector<S>) -> S {
    difference_product(&nodes.0[0], nodes.0.iter().cloned())
}

/// Determinant of the Vandermonde matrix with row `idx.row` and column
/// `idx.col` deleted, from the elementary symmetric closed form.
pub fn vdm_minor<S: Scalar>(nodes: &NodeVector<S>, idx: MinorIndex) -> Result<S> {
    let n = nodes.len();
    let idx = MinorIndex::new(idx.row, idx.col, n)?;
    let proto = &nodes.0[0];
    let rest: Vec<S> = nodes
        .0
        .iter()
        .enumerate()
        .filter(|&(i, _)| i + 1 != idx.row)
        .map(|(_, x)| x.clone())
        .collect();
    let e = elementary_symmetric_all(proto, &rest);
    let sym = e[n - idx.col].clone();
    Ok(sym * difference_product(proto, rest.iter().cloned()))
}

/// `e_r(nodes)`; zero when `r > N`.
pub fn elementary_symmetric<S: Scalar>(nodes: &NodeVector<S>, r: usize) -> S {
    let proto = &nodes.0[0];
    elementary_symmetric_all(proto, &nodes.0)
        .into_iter()
        .nth(r)
        .unwrap_or_else(|| proto.zero_like())
}

/// Coefficients of `prod_i (1 + x_i t)`, i.e. `[e_0, e_1, ..., e_N]`.
pub(crate) fn elementary_symmetric_all<S: Scalar>(proto: &S, nodes: &[S]) -> Vec<S> {
    let mut e = vec![proto.zero_like(); nodes.len() + 1];
    e[0] = proto.one_like();
    for (count, x) in nodes.iter().enumerate() {
        for r in (1..=count + 1).rev() {
            let t = e[r - 1].clone() * x;
            e[r] = e[r].clone() + t;
        }
    }
    e
}

/// Determinant by elimination: fraction-free on integers in exact mode,
/// partial pivoting otherwise. Limited to [`BRUTE_FORCE_MAX_DIM`].
pub fn brute_force_det<S: Scalar>(matrix: &[Vec<S>]) -> Result<S> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("determinant needs a non-empty square matrix".into()));
    }
    if n > BRUTE_FORCE_MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "matrix dimension {n} exceeds the brute-force limit {BRUTE_FORCE_MAX_DIM}"
        )));
    }
    determinant(matrix)
}

pub(crate) fn determinant<S: Scalar>(matrix: &[Vec<S>]) -> Result<S> {
    match S::exact_determinant(matrix) {
        Some(det) => Ok(det),
        None => elimination_determinant(matrix.to_vec()),
    }
}
