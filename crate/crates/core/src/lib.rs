//! Pseudo-spectral simulator for the nonlinear Maxwell-Schrodinger system in
//! Coulomb gauge on a periodic box, with quantum-hydrodynamic post-processing
//! and numerical probes of the associated functional inequalities.

pub mod error;
mod par;
pub mod spectral;
pub mod state;
pub mod diagnostics;
pub mod dynamics;
pub mod madelung;
pub mod estimates;

pub use error::{Error, Result};
