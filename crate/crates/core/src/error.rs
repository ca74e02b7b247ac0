use thiserror::Error;

/// Errors raised by the simulation, model and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system size: {0}")]
    InvalidSize(String),

    #[error("site index {site} out of range for {num_qubits} qubits")]
    SiteOutOfRange { site: usize, num_qubits: usize },

    #[error("duplicate site {0} in Pauli string")]
    DuplicateSite(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("generator group `{0}` contains non-commuting terms")]
    NonCommutingGroup(String),

    #[error("expectation value has imaginary part {imag:e} (tolerance {tol:e})")]
    ComplexExpectation { imag: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("optimization diverged at iteration {iteration}: energy = {energy}")]
    Diverged { iteration: usize, energy: f64 },

    #[error("dense diagonalization refused for {num_qubits} qubits (limit {limit}); use Lanczos")]
    DenseTooLarge { num_qubits: usize, limit: usize },

    #[error("Lanczos did not converge after {krylov_dim} vectors (residual {residual:e})")]
    LanczosNotConverged { krylov_dim: usize, residual: f64 },

    #[error("reference cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
