use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("unbound variable `{0}` during evaluation")]
    UnboundVariable(String),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("degree {degree} exceeds the configured cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("ill-conditioned division: eigenvalue gap {gap:.3e} below {threshold:.1e}")]
    IllConditioned { gap: f64, threshold: f64 },

    #[error("{0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::InvalidSymbol(_)
                | Error::OutOfRange(_)
        )
    }
}
