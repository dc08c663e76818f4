use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum SplitError {
    /// Block count or per-block dimensions do not match the expected layout.
    #[error("layout mismatch: {0}")]
    Layout(String),

    /// A metric failed its positive-definiteness or self-adjointness certificate.
    #[error("metric integrity: {0}")]
    MetricIntegrity(String),

    /// A requested (function, metric) or (function, skew) pairing has no
    /// supported evaluation route.
    #[error("unsupported pairing: {0}")]
    Capability(String),

    /// Algorithm parameters violate the input list of the selected scheme.
    #[error("config: {0}")]
    Config(String),

    /// A value that must be finite came out NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Domain violation (e.g. a point with empty subdifferential).
    #[error("domain: {0}")]
    Domain(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SplitError>;
