use thiserror::Error;

/// Errors raised by the radial harmonic-analysis and dynamics layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("unsupported for this model: {0}")]
    Unsupported(String),

    #[error("model is not calibrated; run calibrate_inversion first")]
    Uncalibrated,

    #[error("lambda = {lambda} lies outside the declared strip |Im| < {halfwidth}")]
    Domain { lambda: String, halfwidth: f64 },

    #[error("Re c = {re_c} does not exceed the threshold c_p = {threshold}")]
    Threshold { re_c: f64, threshold: f64 },

    #[error("symbol is constant on the sampled strip; the operator acts as a scalar")]
    ConstantSymbol,

    #[error("probe transform vanishes at lambda = {lambda} (|probe^| = {magnitude:e})")]
    ProbeZero { lambda: String, magnitude: f64 },

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for invalid input or domain, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Truncation(_) | Error::ProbeZero { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
