//! Numerically exact dynamics of a two-level system in a structured bosonic
//! environment at finite temperature.
//!
//! Pipeline, end to end:
//!
//! ```text
//!   spectral density J(w), temperature beta
//!        |  thermal extension to signed frequencies      (spectral)
//!        v
//!   J_beta(w) on [-wc, wc]
//!        |  orthogonal-polynomial recurrence             (chainmap)
//!        v
//!   semi-infinite chain (omega_k, g_k), system coupling g0
//!        |  MPO + adaptive one-site TDVP                 (tensornet)
//!        v
//!   |psi(t)> as an MPS
//!        |  quadratic correlators, star-basis rotation   (observables)
//!        v
//!   extended-bath spectra n(w), C(w, w')
//!        |  inverse thermofield rotation                 (thermofield)
//!        v
//!   physical-bath occupations vs Bose-Einstein baseline
//! ```
//!
//! `oracle` holds independent reference implementations (dense state-vector
//! propagation, adaptive-quadrature moments) used by the test suites, and
//! `analysis` the peak finding / curve fitting / effective-potential tools.
//!
//! Runnable walkthroughs live under `examples/`:
//!
//! ```text
//! cargo run --release -p ttedopa --example thermalized_sdf
//! cargo run --release -p ttedopa --example chain_coefficients
//! cargo run --release -p ttedopa --example small_chain_dynamics
//! cargo run --release -p ttedopa --example thermal_emission
//! cargo run --release -p ttedopa --example physical_backmap
//! cargo run --release -p ttedopa --example polaron_analysis
//! ```

pub mod analysis;
pub mod chainmap;
pub mod config;
pub mod error;
pub mod observables;
pub mod oracle;
pub mod pipeline;
pub mod quad;
pub mod spectral;
pub mod tensornet;
pub mod thermofield;

pub use error::{Error, Result};
