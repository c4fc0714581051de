//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by construction, simulation, and analysis routines.
#[derive(Debug, Error)]
pub enum QvError {
    /// A vector that must be nonzero (e.g. before normalization) was zero.
    #[error("cannot normalize a zero vector")]
    ZeroVector,

    /// A matrix failed the Hermiticity check.
    #[error("matrix is not Hermitian: max |m - m†| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    /// A matrix failed the density-matrix checks (PSD + unit trace).
    #[error("not a density matrix: {reason}")]
    NotDensityMatrix { reason: String },

    /// A parameter was outside its documented range.
    #[error("parameter `{name}` = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// The requested strategy family is not defined at this θ.
    #[error("θ = {theta} is outside the regime of the {family} strategy: {hint}")]
    Regime {
        theta: f64,
        family: &'static str,
        hint: &'static str,
    },

    /// A Born-rule probability fell outside [0, 1] beyond tolerance.
    #[error("Born probability {value} outside [0, 1]")]
    InvalidProbability { value: f64 },

    /// Root finding failed: no sign change inside the bracket.
    #[error("no root in bracket [{lo}, {hi}] for the target equation")]
    NoRootInBracket { lo: f64, hi: f64 },

    /// A fit had too little or degenerate data.
    #[error("fit failed: {reason}")]
    FitFailed { reason: String },

    /// Every Task A round was censored; only a bound on Δ_ε is available.
    #[error(
        "all {rounds} rounds censored at {max_copies} copies; \
         one-sided 95% upper bound Δ_ε ≤ {delta_eps_upper:.3e}"
    )]
    AllCensored {
        rounds: u64,
        max_copies: u64,
        delta_eps_upper: f64,
    },

    /// Configuration file or field rejected.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure while writing experiment artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QvError>;
