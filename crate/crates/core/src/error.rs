use thiserror::Error;

use crate::linalg::SolveReport;
use crate::solvers::SolverTrace;

/// Errors raised across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("singular matrix (pivot magnitude {pivot:e})")]
    SingularMatrix { pivot: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "linear solve failed after {} iterations (relative residual {:e})",
        report.iterations,
        report.final_residual_norm
    )]
    SolveFailed { report: SolveReport },
    #[error("{what} did not converge within {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },
    #[error("{what} produced a non-finite value at iteration {iteration}")]
    Diverged {
        what: &'static str,
        iteration: usize,
        trace: Box<SolverTrace>,
    },
    #[error("outer step {step}: {source}")]
    OuterStep { step: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
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
