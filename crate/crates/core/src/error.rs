use thiserror::Error;

use crate::inverse::AdmissibilityReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error("argument {value} outside the domain of {function}: {reason}")]
    Domain {
        function: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("series for |z| = {z_abs} would diverge numerically (radius {radius})")]
    SeriesRadius { z_abs: f64, radius: f64 },

    #[error("contour quadrature did not stabilize: last change {last_change:e} after {nodes} nodes")]
    NonConvergence { last_change: f64, nodes: usize },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("mode index {index} outside the stored prefix of length {len}")]
    ModeIndex { index: usize, len: usize },

    #[error("model has no eigenfunction evaluator (custom spectrum)")]
    NoEigenfunctions,

    #[error("stored prefix of {stored} modes cannot reach tolerance {tol:e} (remaining bound {bound:e})")]
    InsufficientPrefix { stored: usize, tol: f64, bound: f64 },

    #[error("observation data is inadmissible")]
    Inadmissible(Box<AdmissibilityReport>),

    #[error("observation map is not monotone in rho on the search box (drho changes sign {sign_changes} times)")]
    NonMonotone { sign_changes: usize },

    #[error("root lies within the rho clamp distance of 1 (ratio {ratio:e} below clamped range {clamped_lower:e})")]
    RootBeyondClamp { ratio: f64, clamped_lower: f64 },

    #[error("spacing condition violated: t0 = {t0}, t1 = {t1}")]
    SpacingViolation {
        t0: f64,
        t1: f64,
        report: Box<AdmissibilityReport>,
    },

    #[error("determinant changed sign during the solve (trace length {0})")]
    DeterminantSignChange(usize),

    #[error("inner bisection in mu = lambda^sigma left the sigma box: sigma = {sigma}")]
    InnerBracket { sigma: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("empirical T0 not found below {cap}")]
    T0NotFound { cap: f64 },

    #[error("extended-precision series out of range: |z| = {0} > 60")]
    OracleRange(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
