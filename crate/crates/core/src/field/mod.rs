//! Finite-difference electrostatics of the meshed-plate capacitor.
//!
//! Laplace's equation is relaxed with red-black successive over-relaxation
//! on a uniform lattice inside a grounded box. A tilted top plate is
//! handled with Shortley-Weller stencils on the z links that cross it.

mod geometry;
mod map;
mod solver;

pub use geometry::{CapacitorGeometry, PlateDrive, MAX_VALIDATED_TILT_ARCMIN};
pub use map::{FieldMap, LevelSummary, SlicePlane};
pub use solver::{solve_laplace, solve_laplace_with, tilt_sensitivity, Lattice, SolverOptions};
