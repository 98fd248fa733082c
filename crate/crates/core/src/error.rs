use thiserror::Error;

use crate::efg::TreeError;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("not a probability distribution: {0}")]
    NotSimplex(String),
    #[error("invalid matrix game: {0}")]
    InvalidGame(String),
    #[error("point outside the interior of the simplex: {0}")]
    Boundary(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("numerical failure at iteration {iteration}: {detail}")]
    Numerical { iteration: u64, detail: String },
    #[error("oracle size cap exceeded: {cells} cells > {cap}")]
    OracleTooLarge { cells: usize, cap: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

pub(crate) fn ensure_finite(context: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}
