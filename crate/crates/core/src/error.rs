use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("not representable in exact rational mode: {0}")]
    ExactMode(String),

    #[error("singular system: {0}")]
    Singular(String),

    /// The verification check could not be met at any precision up to the cap.
    #[error(
        "precision exhausted at {bits} bits (log2 backward error {}, \
         log2 forward error estimate {}, residual {residual})",
        show_log2(log2_backward_error),
        show_log2(log2_forward_error)
    )]
    PrecisionExhausted {
        bits: usize,
        residual: String,
        log2_backward_error: Option<f64>,
        log2_forward_error: Option<f64>,
    },
}

fn show_log2(x: &Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.1}"),
        None => "-inf".to_string(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
