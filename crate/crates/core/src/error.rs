//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid beam parameters: {0}")]
    InvalidBeam(String),

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("azimuthal index ell = {0} is unsupported; field evaluation requires ell = 0")]
    NonRadialMode(i32),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("angular spectrum is not normalized (discrete norm = {norm})")]
    UnnormalizedSpectrum { norm: f64 },

    #[error(
        "evanescent mask would discard {lost_fraction:.3e} of the field energy (limit {limit:.1e})"
    )]
    EvanescentLoss { lost_fraction: f64, limit: f64 },

    #[error(
        "longitudinal wavevector is evanescent: kappa^2 = {kappa_sq:.6e} exceeds k^2 = {k_sq:.6e}"
    )]
    EvanescentKz { kappa_sq: f64, k_sq: f64 },

    #[error("quadrature failed to converge (best error estimate {error_estimate:.3e})")]
    QuadratureNonConvergence { error_estimate: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scan data: {0}")]
    InvalidScan(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("fit did not converge after {iterations} iterations")]
    FitNonConvergence { iterations: usize, partial: Box<crate::analysis::FitResult> },

    #[error("rank-deficient Jacobian: parameter {parameter} has no influence on the model")]
    RankDeficientJacobian { parameter: &'static str },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
