//! Matrix-product state machinery: states, the chain Hamiltonian MPO,
//! Krylov local exponentials, the TDVP stepper, and checkpoint IO.

pub mod checkpoint;
pub mod krylov;
pub mod mpo;
pub mod mps;
pub mod tdvp;

pub use mpo::{chain_hamiltonian_mpo, MpoOperator};
pub use mps::MpsState;
pub use tdvp::{expectation, tdvp_step, EvolutionConfig, StepReport};
