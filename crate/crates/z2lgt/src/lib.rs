//! Real-time dynamics and entanglement structure of a Z2 lattice gauge
//! theory on a two-leg ladder, in its dual spin formulation.
//!
//! The crate covers the full chain from the model to spectral statistics:
//! building the dual Hamiltonian, exact and Trotterised evolution, simulated
//! randomized measurements, entanglement-Hamiltonian tomography, and the
//! gap-ratio and form-factor analysis of the resulting spectra.

pub mod analysis;
pub mod ansatz;
pub mod circuit;
pub mod error;
pub mod lattice;
pub mod measurement;
pub mod optimize;
pub mod pauli;
pub mod pipeline;
pub mod plots;
pub mod rng;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
