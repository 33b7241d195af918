//! Numerical tests of the classical limit of quantum mechanics.
//!
//! Classical flows, Gaussian coherent-state propagation, split-operator grid
//! dynamics and explicit error bounds for the distance between the classical
//! trajectory and the quantum expectation values, plus spectral bound/scattering
//! classifiers and a units-scaling layer. Internal units fix ℏ = 1.

pub mod error;
pub mod classical;
pub mod cli;
pub mod comparator;
pub mod corpus;
pub mod grid;
pub mod hamiltonian;
pub mod hermite;
pub mod moments;
pub mod packets;
pub mod reduction;
pub mod scaling;
pub mod spectral;

pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianSpec, PhasePoint, PotentialModel};
