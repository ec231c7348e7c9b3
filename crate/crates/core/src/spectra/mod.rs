//! Synthetic photon-count spectra and line fitting.

mod fit;
mod lineshape;
mod pulse;
mod record;
mod synth;

pub use fit::{fit_parabola, fit_spectrum, guess_near, initial_guess, FitOptions, LineFitResult, ShiftPoint};
pub use lineshape::{gaussian, line_profile, lorentzian, LineModel, LineShape};
pub use pulse::{pulse_spectrum, PulseProfile};
pub use record::SpectrumRecord;
pub use synth::{
    expected_counts, placed_channels, synthesize_spectrum, uniform_grid, NoiseModel, PlacedChannel,
    TransitionConfig,
};
