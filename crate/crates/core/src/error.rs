use thiserror::Error;

/// Library-wide error type. The CLI maps the variants onto its documented
/// exit-code classes (config = 2, convergence = 3, domain = 4).
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's domain (map pole, singular source,
    /// interface point without a region hint, cusp proximity).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unsupported configuration (bad radii, R0 out of the
    /// guaranteed range, normalization mismatch, pole inside working domain).
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative or truncated computation failed to meet its tolerance;
    /// carries the achieved residual.
    #[error("convergence failure: {msg} (achieved residual {residual:.3e})")]
    Convergence { msg: String, residual: f64 },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn convergence(msg: impl Into<String>, residual: f64) -> Self {
        Error::Convergence {
            msg: msg.into(),
            residual,
        }
    }
}
