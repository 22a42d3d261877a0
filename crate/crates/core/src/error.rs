use thiserror::Error;

/// Errors raised by the laboratory.
///
/// The variants map one-to-one onto the CLI exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called outside its domain.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A runtime invariant (simplex, ordering, ...) was broken.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

// `!cond` rather than the flipped comparison so that NaN fails every check.
macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
