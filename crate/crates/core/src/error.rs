use thiserror::Error;

/// Errors produced by the operator algebra, the Floquet machinery and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("operator is not unitary (defect {defect:.3e})")]
    NonUnitary { defect: f64 },

    #[error("eigenbasis is defective (residual {residual:.3e})")]
    DefectiveEigenbasis { residual: f64 },

    #[error("output times must be strictly increasing and not before the start time")]
    InvalidTimes,

    #[error("integrator step size underflow at t = {t_reached} (h = {step:.3e})")]
    StepUnderflow { t_reached: f64, step: f64 },

    #[error("integrator produced a non-finite state at t = {t_reached}")]
    NonFinite { t_reached: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
