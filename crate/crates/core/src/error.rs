//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested embedding is structurally degenerate.
    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),

    /// The integrator produced a non-finite or unbounded state.
    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    /// Local minimization hit its iteration cap; carries the best point seen.
    #[error("local minimization did not converge after {iterations} iterations (best energy {best_energy})")]
    NonConvergence {
        best_energy: f64,
        best_phases: Vec<f64>,
        iterations: usize,
    },

    /// A ratio against a zero reference energy is undefined.
    #[error("reference energy is zero; ratio undefined")]
    ZeroReference,

    /// Exhaustive search refused; the grid would be too large.
    #[error("refusing brute-force scan for n = {n}: {points} grid evaluations required")]
    BruteForceTooLarge { n: usize, points: u128 },

    /// A graph expected to be complete is missing edges.
    #[error("graph is not complete; {} missing pair(s), first: {:?}", missing.len(), missing.first())]
    NotComplete { missing: Vec<(usize, usize)> },

    /// A text graph file failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An experiment plan document is malformed.
    #[error("plan schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
