use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: bad probabilities, mismatched alphabets, out-of-range parameters.
    #[error("validation error: {0}")]
    Validation(String),

    /// Exact enumeration would exceed the configured size cap.
    #[error("resource cap exceeded: {what} needs {count} items (cap {cap})")]
    Resource { what: String, count: u128, cap: u128 },

    /// An iterative routine failed to converge or to bracket its target.
    #[error("numeric error: {message} (lo = {lo}, hi = {hi}, f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Numeric {
        message: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Resource { .. } => "resource",
            Error::Numeric { .. } => "numeric",
        }
    }
}
