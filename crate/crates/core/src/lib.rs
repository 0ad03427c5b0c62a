//! Pseudo-spectral solvers for the one- and two-phase Muskat problem on the
//! torus, with Littlewood-Paley norm diagnostics and a finite-difference
//! oracle for the Dirichlet-Neumann operator.

pub mod besov;
pub mod config;
pub mod dn;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod oracle;
pub mod params;
pub mod random;
pub mod spectral;
pub mod two_phase;
pub mod verify;

pub use error::{Error, Result};
pub use params::PhysicalParams;
