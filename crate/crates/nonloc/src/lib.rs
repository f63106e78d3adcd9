//! Verification engine for hierarchic multipartite and network nonlocality.
//!
//! States are built in [`states`], conditioned and measured in [`measure`],
//! scored by the functionals of [`bell`] and compared against the tables and
//! oracles of [`bounds`]. [`optimize`] searches measurement settings and
//! [`witness`] lifts stabilizer witnesses through the same post-selection.
//! [`scenarios`] assembles the worked network and GHZ/W examples.

pub mod bell;
pub mod bounds;
pub mod measure;
pub mod optimize;
pub mod qcore;
pub mod scenarios;
pub mod states;
pub mod witness;

/// Default absolute tolerance for value comparisons.
pub const TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("zero-probability post-selection on party {party}")]
    ZeroProbability { party: usize },
    #[error("round {round}: zero-probability post-selection on party {party}")]
    ZeroProbabilityRound { round: usize, party: usize },
    #[error("behavior violates no-signaling by {0:.3e}")]
    Signaling(f64),
    #[error("scenario too large: {0}")]
    TooLarge(String),
    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
