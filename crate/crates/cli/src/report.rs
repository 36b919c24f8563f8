//! Serializable pieces of the output envelope.

use std::path::Path;

use gauss_cardinal::node_solver::NodeCoefficients;
use gauss_cardinal::{LatticeVec, Scalar};
use serde::Serialize;

use crate::{CliError, CliResult};

/// `p/q` in exact mode, a decimal otherwise.
pub fn render<S: Scalar>(x: &S) -> String {
    x.to_decimal_string()
}

/// Decimal text for plotting; exact values are rounded to 256 bits.
pub fn render_decimal<S: Scalar>(x: &S) -> String {
    if S::EXACT {
        x.to_big_float(256).to_decimal_string()
    } else {
        x.to_decimal_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexedValue {
    pub index: i64,
    pub value: String,
}

/// A coefficient vector with the method and precision that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientBlock {
    pub method: String,
    pub precision: String,
    pub values: Vec<IndexedValue>,
}

impl CoefficientBlock {
    pub fn new<S: Scalar>(method: &str, precision: &str, v: &LatticeVec<S>) -> Self {
        CoefficientBlock {
            method: method.to_string(),
            precision: precision.to_string(),
            values: v
                .iter()
                .map(|(index, x)| IndexedValue {
                    index,
                    value: render(x),
                })
                .collect(),
        }
    }

    /// `index,value` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for v in &self.values {
            out.push_str(&format!("{},{}\n", v.index, v.value));
        }
        out
    }
}

/// One solve: coefficients plus their quality measures, all at `precision`.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionBlock {
    pub method: String,
    pub precision: String,
    /// Width first requested when escalation raised the precision.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escalated_from: Option<usize>,
    pub verified: bool,
    pub coefficients: CoefficientBlock,
    pub residual_inf: String,
    pub residual_sq: String,
    pub log2_backward_error: Option<f64>,
    pub log2_forward_error: Option<f64>,
    pub palindrome: bool,
    pub palindrome_defect: String,
    pub alternating_signs: bool,
}

impl SolutionBlock {
    pub fn new<S: Scalar>(
        sol: &NodeCoefficients<S>,
        verified: bool,
        escalated_from: Option<usize>,
    ) -> Self {
        let method = sol.method.to_string();
        let precision = sol.precision.to_string();
        SolutionBlock {
            coefficients: CoefficientBlock::new(&method, &precision, &sol.d),
            method,
            precision,
            escalated_from,
            verified,
            residual_inf: render(&sol.residual_inf),
            residual_sq: render(&sol.residual_sq),
            log2_backward_error: sol.log2_backward_error,
            log2_forward_error: sol.log2_forward_error,
            palindrome: sol.is_palindrome(),
            palindrome_defect: render(&sol.palindrome_defect()),
            alternating_signs: sol.has_alternating_signs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: String,
    pub value: String,
    pub precision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    /// Which solution the curve was evaluated from.
    pub method: String,
    pub points: Vec<CurvePoint>,
    #[serde(skip)]
    pub csv_rows: Vec<(String, String)>,
}

impl Curve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in &self.csv_rows {
            out.push_str(&format!("{x},{v}\n"));
        }
        out
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
