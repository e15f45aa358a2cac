use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input.
    #[error("{module}: invalid input: {msg}")]
    Invalid { module: &'static str, msg: String },

    /// File or text input that failed validation at a specific line.
    #[error("{module}: line {line}: {msg}")]
    Parse {
        module: &'static str,
        line: usize,
        msg: String,
    },

    /// A numerical routine could not produce a trustworthy result.
    #[error("{module}: {msg}")]
    Numerical { module: &'static str, msg: String },

    /// The zero finder's count disagrees with the counting estimate.
    #[error("zeros: audit failed for {label} on [{lo:.3}, {hi:.3}]: found {found}, expected {expected:.2}")]
    ZeroAudit {
        label: String,
        lo: f64,
        hi: f64,
        found: usize,
        expected: f64,
    },

    /// A construction ran out of its size budget before certifying.
    #[error("constructions: {0}")]
    CapExhausted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Invalid {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn numerical(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            msg: msg.into(),
        }
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid { .. } | Error::Parse { .. })
    }
}
