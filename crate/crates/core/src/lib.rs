//! Stark-shift spectroscopy of the Rb 5D levels.
//!
//! The crate follows the measurement chain end to end:
//!
//! * [`angular`]: Wigner symbols, hyperfine tensor factors and dipole
//!   transition strengths between magnetic sublevels.
//! * [`stark`]: level and transition shifts in a static field, unit
//!   conversion and the embedded reference values.
//! * [`spectra`]: synthetic photon-count spectra and the two-component
//!   line fits used to locate each hyperfine component.
//! * [`extraction`]: the linear inversion from quadratic sensitivities to
//!   scalar and tensor polarizabilities, with the uncertainty budget.
//! * [`pumping`]: optical pumping toward the stretched state in the presence
//!   of Larmor precession.
//! * [`field`]: finite-difference model of the meshed-plate capacitor.
//!
//! Batch workloads (Monte Carlo over seeds, field sweeps, relaxation sweeps)
//! run through [`par`], which uses rayon when the `parallel` feature is on
//! and falls back to plain iterators otherwise.

pub mod angular;
pub mod error;
pub mod extraction;
pub mod field;
pub mod par;
pub mod pumping;
pub mod spectra;
pub mod stark;

pub use error::{Error, Result};
