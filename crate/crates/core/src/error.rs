use thiserror::Error;

use crate::model::Species;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (defect {defect:.3e} exceeds tolerance)")]
    NotHermitian { defect: f64 },

    #[error("interaction matrix V{pair} is rank deficient (|det| = {det:.3e})")]
    RankDeficient { pair: &'static str, det: f64 },

    #[error("gauge matrix for species {species} is not unitary (defect {defect:.3e})")]
    NotUnitary { species: Species, defect: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unphysical block at species {species}, shell {shell}: eigenvalue {eigenvalue:.6e} outside [0, 1]")]
    Unphysical {
        species: Species,
        shell: usize,
        eigenvalue: f64,
    },

    #[error(
        "step rejected at t = {time:.6e}: species {species}, shell {shell} has eigenvalue {eigenvalue:.6e}; reduce dt"
    )]
    GuardRejected {
        time: f64,
        species: Species,
        shell: usize,
        eigenvalue: f64,
    },

    #[error("entropy decreased by {decrease:.3e} at t = {time:.6e}")]
    EntropyDecrease { time: f64, decrease: f64 },

    #[error("equilibrium fit failed after {iterations} iterations; best residual {best_residual:.3e}")]
    FitFailure {
        iterations: usize,
        best_residual: f64,
    },

    #[error("inconsistent chemical potentials: {0}")]
    InconsistentParams(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("snapshot parse error at line {line}: {msg}")]
    Snapshot { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
