//! Angular-momentum algebra for hyperfine dipole transitions.

mod excitation;
mod half_integer;
mod hyperfine;
mod wigner;

pub use excitation::{
    excitation_channels, excitation_probabilities, polarization_weights, ExcitationChannel,
    ExcitationConfig, ProbePolarization, ProjectionModel,
};
pub use half_integer::HalfInteger;
pub use hyperfine::{
    manifold, tensor_factor, transition_strength, FineLevel, HyperfineSublevel, Polarization,
    RB87_NUCLEAR_SPIN,
};
pub use wigner::{wigner_3j, wigner_6j};
