use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside sampled coupling range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e}) after {evaluations} evaluations")]
    Quadrature {
        tol: f64,
        estimate: f64,
        evaluations: usize,
    },

    #[error("{0}")]
    NotAnalytic(String),

    #[error("Fock truncation at dim {dim} is inadequate: {reason}")]
    Truncation { dim: usize, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("master equation integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("post-selected outcome has probability {probability:e}")]
    NullOutcome { probability: f64 },

    #[error("phase-space point |beta| = {modulus} is beyond reach (needs n = {needed} > n_max = {n_max})")]
    BeyondReach {
        modulus: f64,
        needed: u32,
        n_max: u32,
    },

    #[error("run budget saturated for f = {f}")]
    BudgetSaturated { f: f64 },

    #[error("moment fit failed: {0}")]
    Fit(String),

    #[error("cannot parse state spec `{spec}`: {reason}")]
    StateSpec { spec: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
