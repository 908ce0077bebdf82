//! Gaussian-subspace impurity solver workbench.
//!
//! Exact diagonalization, superpositions of fermionic Gaussian states,
//! compressed matchgate circuits for Hadamard-test Green's functions,
//! statevector simulation with noise mitigation, PSD signal processing, and
//! Bethe-lattice DMFT.

pub mod circuit;
pub mod config;
pub mod dmft;
pub mod error;
pub mod fgs;
pub mod fock;
pub mod greens;
pub mod linalg;
pub mod model;
pub mod par;
pub mod signal;
pub mod simulator;
pub mod subspace;

pub use error::{Error, Result};
