use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not Hermitian (defect {0:e})")]
    NonHermitian(f64),
    #[error("argument {0} outside the domain of the function")]
    DomainError(f64),
    #[error("invalid Schatten exponent {0}")]
    BadExponent(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("a priori probability {0} is not in ]0,1[")]
    BadProbability(f64),
    #[error("quadrature did not reach tolerance (estimated error {0:e})")]
    QuadratureFailure(f64),
    #[error("observables do not commute (defect {0:e})")]
    NonCommutingFamily(f64),
    #[error("time must be nonzero")]
    ZeroTime,
    #[error("finite-difference step selection failed")]
    StepSelectionFailure,
    #[error("coupling violates gauge invariance (defect {0:e})")]
    GaugeViolation(f64),
    #[error("one-particle density is not faithful")]
    NonFaithfulDensity,
    #[error("dimension {0} is too large for the Fock oracle")]
    DimensionTooLarge(usize),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("state is not faithful")]
    NotFaithful,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no convergence (last change {0:e})")]
    NoConvergence(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
