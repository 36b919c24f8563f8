//! Interpolation by integer shifts of Gaussians through finite-rank node systems.
//!
//! The node function `H(x) = sum_{k=-n}^{n} d_k q^((x-k)^2)` is fixed by the
//! conditions `H(j) = delta_{0j}` for `|j| <= m`. This crate assembles that
//! system, evaluates its determinant in closed form, solves it by dense
//! elimination, by the half-size palindromic fold, and by explicit Vandermonde
//! ratios, and uses the result to interpolate integer samples.
//!
//! All computations run either on exact rationals or on binary floats with a
//! chosen mantissa width; see [`arithmetic`].

pub mod arithmetic;
pub mod error;
pub mod gauss_system;
pub mod interpolator;
pub mod lattice;
mod linalg;
pub mod node_solver;
pub mod vandermonde;

pub use arithmetic::{BigFloat, PrecisionContext, PrecisionMode, Scalar};
pub use error::{Error, Result};
pub use gauss_system::{GaussMatrix, QSpec, ShiftParameter, SystemSpec};
pub use interpolator::{GuaranteedRegion, SampleWindow, SeriesCoefficients};
pub use lattice::LatticeVec;
pub use node_solver::{DeterminantReport, Escalation, NodeCoefficients, SolveMethod, Tolerance};

pub use num::{BigInt, BigRational};
