use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed group, norm, operator or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A field or flux produced a non-finite value.
    #[error("non-finite evaluation of {what} at {point:?}")]
    Evaluation { what: String, point: Vec<f64> },

    /// |∇_L u| fell below the regularization floor while p < 2.
    #[error("degenerate horizontal gradient |∇u| = {norm:e} at {point:?} (p < 2)")]
    DegenerateGradient { point: Vec<f64>, norm: f64 },

    /// The integration region contains no admissible sample.
    #[error("empty effective region: {0}")]
    EmptyRegion(String),

    /// A name was not found in the plugin tables.
    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(value: f64, what: &str, point: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation {
            what: what.to_string(),
            point: point.to_vec(),
        })
    }
}
