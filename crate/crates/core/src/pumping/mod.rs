//! Optical pumping into the 5P3/2 (F=3, m=3) state with Larmor precession
//! about a static field of arbitrary direction.
//!
//! Pumping acts on sublevel populations as a rate process; the field acts
//! coherently on the density matrix. The two are interleaved with a
//! symmetric split step.

mod dynamics;
mod rotation;
mod state;

pub use dynamics::{
    cycle_matrix, field_sweep, pump_step, simulate_pumping, simulate_with, write_sweep_csv,
    InitialPopulation, PumpDrive, PumpSeries, PumpSimulation, SweepPoint,
};
pub use rotation::{field_basis_matrix, rotate_amplitudes, wigner_small_d};
pub use state::{
    cycling_g_f, larmor_evolve, precess, rotate_from_field_basis, rotate_to_field_basis,
    MagneticField, PumpState, BOHR_MAGNETON_MHZ_PER_GAUSS, C64,
};
