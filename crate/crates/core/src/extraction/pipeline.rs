use serde::{Deserialize, Serialize};

use super::budget::UncertaintyBudget;
use super::equation::{build_equation, EquationOptions, LineSpec, MeasurementEquation};
use super::solve::{propagate_to_alpha, solve_polarizabilities, ExtractionResult};
use crate::angular::{FineLevel, ProbePolarization, RB87_NUCLEAR_SPIN};
use crate::par::{self, stream_seed, ExecMode};
use crate::spectra::{
    fit_parabola, fit_spectrum, guess_near, synthesize_spectrum, uniform_grid, FitOptions, LineFitResult,
    LineShape, ShiftPoint, SpectrumRecord, TransitionConfig,
};
use crate::stark::{FieldPoint, PolarizabilityPair, ReferenceData};
use crate::{Error, Result};

/// Settings of the synthesize → fit → parabola → solve chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lines: Vec<LineSpec>,
    pub fields_kv_per_cm: Vec<f64>,
    /// Base transition settings; the probe helicity is set per spectrum.
    pub transition: TransitionConfig,
    pub grid_mhz: Vec<f64>,
    pub fit_shape: LineShape,
    pub fit_options: FitOptions,
    /// Initial width of each fitted component, MHz.
    pub guess_width_mhz: f64,
    /// Search window around each expected component, MHz.
    pub guess_window_mhz: f64,
    pub equations: EquationOptions,
    pub ground: PolarizabilityPair,
    pub truth_d32: PolarizabilityPair,
    pub truth_d52: PolarizabilityPair,
}

impl PipelineConfig {
    pub fn rb87() -> Self {
        let r = ReferenceData::rb87();
        let transition = TransitionConfig::pumped(ProbePolarization::SigmaPlus);
        PipelineConfig {
            lines: LineSpec::measured_set().to_vec(),
            fields_kv_per_cm: vec![0.0, 1.5, 2.0, 2.5],
            fit_shape: transition.shape(),
            transition,
            grid_mhz: uniform_grid(-150.0, 50.0, 2.0).expect("valid grid"),
            fit_options: FitOptions::default(),
            guess_width_mhz: 10.0,
            guess_window_mhz: 30.0,
            equations: EquationOptions::default(),
            ground: r.ground_5p32.pair(),
            truth_d32: r.measured_d32.pair(),
            truth_d52: r.measured_d52.pair(),
        }
    }

    pub fn truth(&self, level: FineLevel) -> Result<PolarizabilityPair> {
        match level {
            FineLevel::D32 => Ok(self.truth_d32),
            FineLevel::D52 => Ok(self.truth_d52),
            other => Err(Error::InvalidConfig(format!("{other} is not a 5D level"))),
        }
    }

    pub fn transition_for(&self, probe: ProbePolarization) -> TransitionConfig {
        let mut t = self.transition.clone();
        t.excitation.probe = probe;
        t
    }

    /// Distinct (level, probe) spectra needed by the configured lines.
    pub fn spectrum_kinds(&self) -> Vec<(FineLevel, ProbePolarization)> {
        let mut kinds: Vec<_> = self.lines.iter().map(|l| (l.level, l.probe)).collect();
        kinds.dedup();
        let mut out = Vec::new();
        for k in kinds {
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.transition.validate()?;
        if self.lines.is_empty() {
            return Err(Error::InvalidConfig("no lines configured".into()));
        }
        if self.fields_kv_per_cm.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidConfig("fields must be finite and >= 0".into()));
        }
        if !self.fields_kv_per_cm.contains(&0.0) {
            return Err(Error::InvalidConfig("a zero-field reference spectrum is required".into()));
        }
        if self.grid_mhz.len() < 12 {
            return Err(Error::InvalidConfig("detuning grid needs at least 12 points".into()));
        }
        Ok(())
    }
}

/// Identifies one synthetic or loaded spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumKey {
    pub level: FineLevel,
    pub probe: ProbePolarization,
    pub field_kv_per_cm: f64,
}

impl SpectrumKey {
    pub fn file_stem(&self) -> String {
        let level = match self.level {
            FineLevel::D32 => "d32",
            FineLevel::D52 => "d52",
            _ => "other",
        };
        let probe = match self.probe {
            ProbePolarization::SigmaPlus => "sp",
            ProbePolarization::SigmaMinus => "sm",
        };
        format!("spectrum_{level}_{probe}_{:.3}kvcm", self.field_kv_per_cm)
    }
}

/// Per-line intermediate products.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineTrace {
    pub line: LineSpec,
    pub fits: Vec<(f64, LineFitResult)>,
    pub points: Vec<ShiftPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub traces: Vec<LineTrace>,
    pub equations: Vec<MeasurementEquation>,
    pub result: ExtractionResult,
    pub unconverged_fits: usize,
}

impl PipelineOutcome {
    pub fn with_budget(&self, budget: &UncertaintyBudget) -> Result<ExtractionResult> {
        propagate_to_alpha(&self.result, budget)
    }
}

/// All spectra of one pipeline run, in a fixed order.
pub fn synthesize_set(config: &PipelineConfig, seed: u64) -> Result<Vec<(SpectrumKey, SpectrumRecord)>> {
    config.validate()?;
    let mut out = Vec::new();
    let mut index = 0u64;
    for (level, probe) in config.spectrum_kinds() {
        let tc = config.transition_for(probe);
        let excited = config.truth(level)?;
        for &e in &config.fields_kv_per_cm {
            let key = SpectrumKey { level, probe, field_kv_per_cm: e };
            let rec = synthesize_spectrum(
                &tc,
                level,
                FieldPoint::kv_per_cm(e)?,
                &config.ground,
                &excited,
                &config.grid_mhz,
                stream_seed(seed, index),
            )?;
            index += 1;
            out.push((key, rec));
        }
    }
    Ok(out)
}

fn partner(level: FineLevel, f: i32) -> Result<i32> {
    let j2 = level.j().ok_or_else(|| Error::InvalidConfig(format!("{level} has no J")))?.twice();
    let f_max = (j2 + RB87_NUCLEAR_SPIN.twice()) / 2;
    let f_min = (j2 - RB87_NUCLEAR_SPIN.twice()).abs() / 2;
    if f < f_min || f > f_max {
        return Err(Error::InvalidConfig(format!("{level} has no F = {f}")));
    }
    Ok(if f < f_max { f + 1 } else { f - 1 })
}

/// Fits every spectrum, builds one equation per line and solves.
pub fn extract_from_spectra(
    config: &PipelineConfig,
    spectra: &[(SpectrumKey, SpectrumRecord)],
) -> Result<PipelineOutcome> {
    let mut traces = Vec::new();
    let mut equations = Vec::new();
    let mut unconverged = 0;
    for line in &config.lines {
        let tc = config.transition_for(line.probe);
        let other = partner(line.level, line.f)?;
        let c_line = tc.offset(line.level, 2 * line.f)?;
        let c_other = tc.offset(line.level, 2 * other)?;
        let mut fits: Vec<(f64, LineFitResult)> = Vec::new();
        for (key, rec) in spectra.iter().filter(|(k, _)| k.level == line.level && k.probe == line.probe) {
            let guess = guess_near(rec, [c_line, c_other], config.guess_window_mhz, config.guess_width_mhz);
            let fit = fit_spectrum(rec, &config.fit_shape, Some(guess), &config.fit_options)?;
            if !fit.converged {
                unconverged += 1;
            }
            fits.push((key.field_kv_per_cm, fit));
        }
        fits.sort_by(|a, b| a.0.total_cmp(&b.0));
        let pick = |fit: &LineFitResult| -> (f64, f64) {
            let k = if (fit.centers[0] - c_line).abs() <= (fit.centers[1] - c_line).abs() { 0 } else { 1 };
            (fit.centers[k], fit.center_sigma(k))
        };
        let (c0, s0) = fits
            .iter()
            .find(|(e, _)| *e == 0.0)
            .map(|(_, f)| pick(f))
            .ok_or_else(|| Error::InvalidConfig(format!("{}: no zero-field spectrum", line.label())))?;
        let points: Vec<ShiftPoint> = fits
            .iter()
            .filter(|(e, _)| *e > 0.0)
            .map(|(e, f)| {
                let (c, s) = pick(f);
                ShiftPoint { field_kv_per_cm: *e, shift_mhz: c0 - c, sigma_mhz: (s * s + s0 * s0).sqrt() }
            })
            .collect();
        let coefficient = fit_parabola(&points)?;
        equations.push(build_equation(coefficient, *line, &tc.excitation, config.ground, config.equations)?);
        traces.push(LineTrace { line: *line, fits, points });
    }
    let result = solve_polarizabilities(&equations)?;
    Ok(PipelineOutcome { traces, equations, result, unconverged_fits: unconverged })
}

/// Synthesizes a full data set from the configured truth and extracts it again.
pub fn round_trip(config: &PipelineConfig, seed: u64) -> Result<PipelineOutcome> {
    let spectra = synthesize_set(config, seed)?;
    extract_from_spectra(config, &spectra)
}

/// Independent round trips, one per seed, in seed order.
pub fn monte_carlo(config: &PipelineConfig, seeds: &[u64], mode: ExecMode) -> Vec<Result<PipelineOutcome>> {
    par::map(mode, seeds, |&s| round_trip(config, s))
}
