use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MelnikovError {
    #[error("argument out of domain: {what} = {value} ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("argument {t} lies within {distance:e} of the pole lattice point {pole}")]
    PoleProximity {
        t: Complex64,
        pole: Complex64,
        distance: f64,
    },

    #[error("no resonant orbit: {0}")]
    NoSolution(String),

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("contour radius {radius} exceeds the single-enclosure bound {bound}")]
    SingleEnclosureViolation { radius: f64, bound: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, MelnikovError>;

pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> MelnikovError {
    MelnikovError::Domain {
        what,
        value,
        expected,
    }
}
