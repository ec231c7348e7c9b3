//! From line sensitivities to scalar and tensor polarizabilities.

mod budget;
mod equation;
mod io;
mod pipeline;
mod solve;

pub use budget::{quadrature_budget, BudgetEntry, UncertaintyBudget, STATISTICAL};
pub use equation::{
    build_equation, EquationOptions, GroundTreatment, LineComposition, LineSpec, MeasurementEquation,
};
pub use io::{equations_from_toml, equations_to_toml, write_alpha_table, write_p_table};
pub use pipeline::{
    extract_from_spectra, monte_carlo, round_trip, synthesize_set, LineTrace, PipelineConfig, PipelineOutcome,
    SpectrumKey,
};
pub use solve::{propagate_to_alpha, solve_polarizabilities, ExtractionResult, LevelResult};
