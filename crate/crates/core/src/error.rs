use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Hardy coefficient gamma = {gamma} is not below (N-2)^2/4 = {limit} for N = {n}")]
    HardySupercritical { n: u32, gamma: f64, limit: f64 },

    #[error("outside the admissible regime: {0}")]
    Regime(String),

    #[error("closed form is singular at r = 0 (beta_minus = {beta_minus} > 0)")]
    SingularOrigin { beta_minus: f64 },

    #[error("profile does not vanish at r = 1 (|value| = {value:e})")]
    BoundaryViolation { value: f64 },

    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("integration stopped early: {0}")]
    Integration(String),

    #[error("amplitude bracket [{lo:e}, {hi:e}] does not straddle the {k}-node condition (zero counts {count_lo}, {count_hi})")]
    BracketInvalid {
        k: usize,
        lo: f64,
        hi: f64,
        count_lo: usize,
        count_hi: usize,
    },

    #[error("zero count left {{k-1, k}} inside the bracket (found {count} at amplitude {amplitude:e})")]
    LostNodeCount { amplitude: f64, count: usize },

    #[error("no {k}-node solution found: {reason}")]
    NotFound { k: usize, reason: String },

    #[error("quadrature did not converge (estimate {value:e}, error {error:e})")]
    Quadrature { value: f64, error: f64 },

    #[error("integrability condition violated: {0}")]
    Integrability(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("optimizer did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
