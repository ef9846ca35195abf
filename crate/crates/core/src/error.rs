use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "pattern space of {bits} hidden units exceeds the capacity cap of {cap} bits \
         (global enumeration cost grows as 2^bits; use local explanations instead)"
    )]
    Capacity { bits: usize, cap: u32 },
    #[error("training failed: {0}")]
    Training(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("linear program exceeded {pivots} pivots")]
    NumericalFailure { pivots: usize },
}

impl Error {
    pub(crate) fn shape(what: &'static str, expected: usize, found: usize) -> Self {
        Error::Shape {
            what,
            expected,
            found,
        }
    }
}
