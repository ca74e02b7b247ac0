//! Statevector simulation of Hamiltonian variational ansatz circuits for spin
//! chains, with exact gradients, Adam optimization, entanglement analysis and
//! exact reference ground states.
//!
//! Bit order: qubit `q` is bit `q` of the basis index, so qubit 0 is the least
//! significant bit.

pub mod ansatz;
pub mod entanglement;
pub mod error;
pub mod gradient;
pub mod models;
pub mod optim;
pub mod oracle;
pub mod pauli;
pub mod seeds;
pub mod state;

pub use ansatz::{
    build_hva, build_hva_tfim, build_hva_xxz, build_rqc_baseline, Circuit, InitStrategy, ParameterVector,
};
pub use entanglement::{entanglement_spectrum, entropy, page_entropy, schmidt, Bipartition, EntanglementSpectrum};
pub use error::{Error, Result};
pub use gradient::{EnergyObjective, GradientAnsatz};
pub use models::{HamiltonianGroups, ModelKind, ModelSpec};
pub use optim::{optimize, OptimizationTrace, OptimizerConfig, StopMode};
pub use oracle::{fidelity, ground_state, observable_error_bound, GroundSolution, ReferenceCache};
pub use pauli::{Pauli, PauliString, PauliSum};
pub use seeds::derive_seed;
pub use state::StateVector;
