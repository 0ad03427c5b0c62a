//! Dirichlet-Neumann operators of a graph interface, computed in the
//! flattened strip `z in [-Z, 0]` by Picard iteration of the fixed-point map
//! for the transformed potential.

mod geometry;
mod solver;
mod strip;

pub use geometry::{diffeo_check, lift_eta, q_forms, CoefficientMatrix, DiffeoReport, Geometry, DENOMINATOR_GUARD};
pub use solver::{dn_apply, dn_remainder, solve_potential, DnConfig, DnSolver, FlattenedPotential, Side};
pub use strip::{strip_csv, StripField, StripGrid, TRUNCATION_DECADES};
