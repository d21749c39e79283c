//! Numerical tools for the Kardar–Parisi–Zhang equation: spectral SPDE
//! integrators, a mixed-hybrid finite element solver, lattice growth models
//! and renormalization of mollified noise.

pub mod basis;
pub mod error;
pub mod growth;
pub mod mhfe;
pub mod noise;
pub mod renorm;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
