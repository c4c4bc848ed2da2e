use thiserror::Error;

#[derive(Debug, Error)]
pub enum NegfError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("{0} is not Hermitian")]
    NotHermitian(String),
    #[error("Fock space with {modes} modes exceeds the cap of {cap} modes")]
    FockCap { modes: usize, cap: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("numerical failure in {op}: {detail}")]
    Numerical { op: String, detail: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, NegfError>;

pub(crate) fn dim_check(context: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(NegfError::Dimension {
            context: context.to_string(),
            expected,
            found,
        })
    }
}
