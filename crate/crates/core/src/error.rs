use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("states are parallel (|<a|b>| = {overlap}); no unique Gram-Schmidt partner")]
    DegeneratePair { overlap: f64 },

    #[error("trajectory does not conserve norm at s = {s}: connection residue {residue:e}")]
    NonUnitaryTrajectory { s: f64, residue: f64 },

    #[error("gauge condition violated: residual {residual:e} at s = {at}")]
    GaugeResidual { residual: f64, at: f64 },

    #[error("invalid budget: {0}")]
    Budget(String),

    #[error("{value} is outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("basis has {found} vectors but the space has dimension {dim}")]
    IncompleteBasis { found: usize, dim: usize },

    #[error("orthonormality drift {residual:e} at t = {t}")]
    OrthonormalityDrift { residual: f64, t: f64 },

    #[error("not an instantaneous eigenpath at t = {t}: residual {residual:e}")]
    NotAnEigenpath { t: f64, residual: f64 },

    #[error("integrator failure at t = {t}: {quantity} drift {drift:e}; retry with dt <= {suggested_dt:e}")]
    IntegratorFailure {
        t: f64,
        quantity: &'static str,
        drift: f64,
        suggested_dt: f64,
    },

    #[error("wavefunction node at z = {z}, t = {t} inside the amplitude mask")]
    Node { z: f64, t: f64 },

    #[error("grid geometry: {0}")]
    Geometry(String),

    #[error("operator is not Hermitian: residual {0:e}")]
    NonHermitian(f64),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Stable machine-readable code, used in CLI reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::DegeneratePair { .. } => "degenerate-pair",
            Error::NonUnitaryTrajectory { .. } => "non-unitary-trajectory",
            Error::GaugeResidual { .. } => "gauge-residual",
            Error::Budget(_) => "budget",
            Error::OutOfRange { .. } => "range",
            Error::IncompleteBasis { .. } => "completeness",
            Error::OrthonormalityDrift { .. } => "orthonormality-drift",
            Error::NotAnEigenpath { .. } => "not-an-eigenpath",
            Error::IntegratorFailure { .. } => "integrator-failure",
            Error::Node { .. } => "node",
            Error::Geometry(_) => "geometry",
            Error::NonHermitian(_) => "non-hermitian",
            Error::Consistency(_) => "internal-consistency",
            Error::Invalid(_) => "invalid-input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
