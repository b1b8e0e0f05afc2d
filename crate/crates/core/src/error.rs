use thiserror::Error;

use crate::capacity::CapacitySolution;

/// Errors raised by the library.
///
/// Infinite divergences and capacities are ordinary `f64::INFINITY` return
/// values, never errors.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("alphabet mismatch: {left} vs {right} symbols")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("measure has zero total mass")]
    ZeroMeasure,

    #[error("invalid weight {value} at index {index}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("order {order} out of range: {reason}")]
    OrderOutOfRange { order: f64, reason: &'static str },

    #[error("rho = {0} must be > -1")]
    RhoOutOfRange(f64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("output alphabet of size {size} exceeds the limit {max}")]
    AlphabetTooLarge { size: usize, max: usize },

    #[error("solver stopped after {} iterations with gap {}", .0.iterations, .0.gap)]
    NotConverged(Box<CapacitySolution>),

    #[error("infeasible constraint: {0}")]
    InfeasibleConstraint(String),

    #[error("epsilon core is empty (epsilon below numerical resolution)")]
    EmptyCore,

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("intensity has no thinning bound")]
    UnboundedIntensity,

    #[error("Monte-Carlo variance blow-up: mean {mean}, standard error {stderr}")]
    VarianceBlowup { mean: f64, stderr: f64 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::AlphabetMismatch { .. } => "AlphabetMismatch",
            Error::ZeroMeasure => "ZeroMeasure",
            Error::InvalidWeight { .. } => "InvalidWeight",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::SupportMismatch(_) => "SupportMismatch",
            Error::OrderOutOfRange { .. } => "OrderOutOfRange",
            Error::RhoOutOfRange(_) => "RhoOutOfRange",
            Error::DomainError(_) => "DomainError",
            Error::InvalidPartition(_) => "InvalidPartition",
            Error::AlphabetTooLarge { .. } => "AlphabetTooLarge",
            Error::NotConverged(_) => "NotConverged",
            Error::InfeasibleConstraint(_) => "InfeasibleConstraint",
            Error::EmptyCore => "EmptyCore",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::UnboundedIntensity => "UnboundedIntensity",
            Error::VarianceBlowup { .. } => "VarianceBlowup",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::UnknownSuite(_) => "UnknownSuite",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
