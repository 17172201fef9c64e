//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerics core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed or unsupported input data (bad image payload, bad model text).
    Format(String),
    /// Input is degenerate for the requested operation (e.g. single-mode histogram).
    DegenerateInput(String),
    /// A scalar parameter is outside its admissible range.
    Parameter(String),
    /// SVM training could not start (single-class data, empty set).
    Training(String),
    /// An iterative method hit its iteration cap before reaching tolerance.
    Convergence(String),
    /// Gradient magnitude below the degenerate-gradient threshold; the caller
    /// must skip this evaluation point.
    DegenerateGradient { x: [f64; 2] },
    /// A regular node sits exactly on the zero level set.
    Classification { x: [f64; 2] },
    /// Too few contributing nodes (or an ill-conditioned moment matrix) at an
    /// evaluation point.
    Coverage {
        x: [f64; 2],
        contributing: usize,
        condition: f64,
    },
    /// Linear solver breakdown.
    Solver(String),
    /// Inconsistent run configuration (empty constraint set, conflicting BCs).
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Format(m) => write!(f, "format error: {m}"),
            Error::DegenerateInput(m) => write!(f, "degenerate input: {m}"),
            Error::Parameter(m) => write!(f, "parameter error: {m}"),
            Error::Training(m) => write!(f, "training error: {m}"),
            Error::Convergence(m) => write!(f, "convergence error: {m}"),
            Error::DegenerateGradient { x } => {
                write!(f, "degenerate score gradient at ({}, {})", x[0], x[1])
            }
            Error::Classification { x } => {
                write!(f, "regular node at ({}, {}) lies on the interface", x[0], x[1])
            }
            Error::Coverage { x, contributing, condition } => write!(
                f,
                "coverage failure at ({}, {}): {contributing} contributing nodes, condition estimate {condition:.3e}",
                x[0], x[1]
            ),
            Error::Solver(m) => write!(f, "solver error: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

impl core::error::Error for Error {}
