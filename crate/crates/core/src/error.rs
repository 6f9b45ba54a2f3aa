use thiserror::Error;

use crate::control::SchemeVariant;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integration step underflow at t = {t:e} (step {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("operation requires a periodic Hamiltonian")]
    Aperiodic,

    #[error("{operation} does not support the {variant:?} scheme")]
    UnsupportedVariant { operation: &'static str, variant: SchemeVariant },

    #[error("degenerate unperturbed basis: |z| = {z_abs:e} <= {z_min:e}")]
    DegenerateBasis { z_abs: f64, z_min: f64 },

    #[error("near-degenerate levels {n} and {m} (gap {gap:e}) in perturbation sum")]
    NearDegenerate { n: usize, m: usize, gap: f64 },

    #[error(
        "Fock truncation leakage: population {population:e} in the top two of {n_fock} levels; \
         increase n_fock"
    )]
    FockTruncation { population: f64, n_fock: usize },

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("realization {index}: {source}")]
    Realization { index: usize, source: Box<Error> },

    #[error("quadrature node (delta = {delta:e}, eps = {eps:e}): {source}")]
    QuadratureNode { delta: f64, eps: f64, source: Box<Error> },

    #[error("scan point {index}: {source}")]
    ScanPoint { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
