use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A frequency (carrier or chirp edge) falls outside the covered span.
    #[error("frequency {freq_hz} Hz outside span [{lo_hz}, {hi_hz}) Hz")]
    Span {
        freq_hz: f64,
        lo_hz: f64,
        hi_hz: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid configuration; `field` is the dotted path of the offending key.
    #[error("{field}: {reason}")]
    Config { field: String, reason: String },

    #[error(
        "dense materialization needs {needed} bytes, cap is {cap} bytes (use the closed-form path)"
    )]
    Capacity { needed: u64, cap: u64 },

    /// A metric or normalization is undefined for the given input.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("bad binary dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
