use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("non-finite value from field `{field}` at t = {t}, x = {x:?}")]
    Evaluation { field: String, t: f64, x: Vec<f64> },
    #[error("a = σσ* is singular at t = {t}, x = {x:?}")]
    Singularity { t: f64, x: Vec<f64> },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("solver did not converge: {0}")]
    Convergence(String),
    #[error("point outside the grid interior: {0}")]
    Domain(String),
    #[error("simulation failed: {failed} of {total} paths blew up")]
    Simulation { failed: usize, total: usize },
    #[error("inversion did not converge after {iterations} iterations (residual {residual:e})")]
    Inversion { iterations: usize, residual: f64 },
    #[error("transform construction failed: {0}")]
    Transform(String),
    #[error("measured constants exceed the formula values: {0}")]
    Consistency(String),
    #[error("integrand requirement violated: {0}")]
    Integrand(String),
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
    #[error("configuration error: {0}")]
    Configuration(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
