use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Invalid user-supplied input.
    Input,
    /// A numerical routine failed to deliver a result.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` must be strictly positive (got {value:e})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "spin-wave gap {gap:e} rad/s is not below the qubit frequency {omega_qi:e} rad/s; \
         the single-magnon emission channel is closed"
    )]
    GapExceedsQubitFrequency { omega_qi: f64, gap: f64 },

    #[error("argument outside the domain of `{function}`: {reason}")]
    DomainError { function: &'static str, reason: String },

    #[error("quadrature did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("longitudinal transport parameters are required for the chi_zz diagnostic")]
    MissingTransportParameters,

    #[error("qubits {first} and {second} are closer than the minimum separation ({distance:e} < {min:e} in units of lambda)")]
    CoincidentQubits { first: usize, second: usize, distance: f64, min: f64 },

    #[error("band-structure evaluation hits a square-root singularity at k*lambda = {k_lambda}")]
    SingularPoint { k_lambda: f64 },

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{n} qubits exceed the dense solver limit of {max}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("integrator step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("no admissible disordered configuration after {attempts} attempts")]
    DisorderSamplingExhausted { attempts: usize },

    #[error("unknown {what} `{name}` (available: {available})")]
    UnknownName { what: &'static str, name: String, available: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonPositiveParameter { .. }
            | Error::InvalidParameter { .. }
            | Error::GapExceedsQubitFrequency { .. }
            | Error::MissingTransportParameters
            | Error::CoincidentQubits { .. }
            | Error::DimensionTooLarge { .. }
            | Error::UnknownName { .. } => ErrorClass::Input,
            Error::DomainError { .. }
            | Error::ConvergenceFailure(_)
            | Error::SingularPoint { .. }
            | Error::EigensolverFailure(_)
            | Error::DimensionMismatch { .. }
            | Error::StepSizeUnderflow { .. }
            | Error::DisorderSamplingExhausted { .. } => ErrorClass::Numerical,
        }
    }
}
