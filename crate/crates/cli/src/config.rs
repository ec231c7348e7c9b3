//! Run configuration: one TOML file with a section per verb.
//!
//! Every physical quantity carries its unit in the key name. Unknown keys are
//! rejected so a typo never silently falls back to a default.

use std::path::{Path, PathBuf};

use anyhow::Context;
use rbstark::angular::{ExcitationConfig, FineLevel, HyperfineSublevel, ProbePolarization, ProjectionModel};
use rbstark::extraction::{
    EquationOptions, GroundTreatment, LineComposition, LineSpec, PipelineConfig, UncertaintyBudget,
};
use rbstark::field::{CapacitorGeometry, PlateDrive, SolverOptions};
use rbstark::pumping::{InitialPopulation, MagneticField, PumpDrive, PumpSimulation};
use rbstark::spectra::{uniform_grid, LineModel, LineShape, NoiseModel, PulseProfile, TransitionConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem: unreadable file, bad TOML, unknown key or an
/// out-of-range value. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub transition: TransitionSection,
    pub simulate: SimulateSection,
    pub extract: ExtractSection,
    pub pump: PumpSection,
    pub field: FieldSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            seed: 1,
            transition: TransitionSection::default(),
            simulate: SimulateSection::default(),
            extract: ExtractSection::default(),
            pump: PumpSection::default(),
            field: FieldSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionSection {
    /// Population of 5P3/2 (F=3, mF=3) after pumping.
    pub stretched_population: f64,
    /// Population of 5P3/2 (F=3, mF=2).
    pub neighbor_population: f64,
    pub probe_tilt_deg: f64,
    pub projection: ProjectionModel,
    /// Zero-field component centers, highest F first, per 5D level.
    pub hyperfine_offsets_mhz: Vec<f64>,
    pub natural_fwhm_mhz: f64,
    /// Rectangular excitation pulse; 0 disables pulse broadening.
    pub pulse_duration_ns: f64,
    /// Optional measured pulse spectrum (`freq_mhz,density`), overrides the duration.
    pub pulse_csv: Option<PathBuf>,
    pub dwell_s: f64,
    pub peak_rate_cps: f64,
    pub background_cps: f64,
    pub noise: NoiseModel,
}

impl Default for TransitionSection {
    fn default() -> Self {
        let t = TransitionConfig::pumped(ProbePolarization::SigmaPlus);
        let duration = match t.pulse {
            PulseProfile::Rectangular { duration_ns } => duration_ns,
            _ => 0.0,
        };
        TransitionSection {
            stretched_population: 0.97,
            neighbor_population: 0.03,
            probe_tilt_deg: t.excitation.tilt_deg,
            projection: t.excitation.projection,
            hyperfine_offsets_mhz: t.hyperfine_offsets_mhz,
            natural_fwhm_mhz: t.natural_fwhm_mhz,
            pulse_duration_ns: duration,
            pulse_csv: None,
            dwell_s: t.dwell_s,
            peak_rate_cps: t.peak_rate_cps,
            background_cps: t.background_cps,
            noise: t.noise,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub level: FineLevel,
    pub f: i32,
    pub probe: ProbePolarization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub fields_kv_per_cm: Vec<f64>,
    pub grid_start_mhz: f64,
    pub grid_stop_mhz: f64,
    pub grid_step_mhz: f64,
    pub lines: Vec<LineEntry>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            fields_kv_per_cm: vec![0.0, 1.5, 2.0, 2.5],
            grid_start_mhz: -150.0,
            grid_stop_mhz: 50.0,
            grid_step_mhz: 2.0,
            lines: LineSpec::measured_set().iter().map(|l| LineEntry { level: l.level, f: l.f, probe: l.probe }).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetChoice {
    #[default]
    Rb87_5d,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    /// Directory written by `simulate`; when absent the spectra are synthesized in memory.
    pub input_dir: Option<PathBuf>,
    pub line_model: LineModel,
    pub composition: LineComposition,
    pub ground: GroundTreatment,
    pub budget: BudgetChoice,
    pub guess_window_mhz: f64,
    pub guess_width_mhz: f64,
}

impl Default for ExtractSection {
    fn default() -> Self {
        let p = PipelineConfig::rb87();
        ExtractSection {
            input_dir: None,
            line_model: p.fit_shape.model,
            composition: p.equations.composition,
            ground: p.equations.ground,
            budget: BudgetChoice::default(),
            guess_window_mhz: p.guess_window_mhz,
            guess_width_mhz: p.guess_width_mhz,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    /// Field of the single time-series run.
    pub b_gauss: f64,
    /// Angle between the field and the pump axis.
    pub field_angle_deg: f64,
    pub pump_ns: f64,
    pub free_ns: f64,
    pub dt_ns: f64,
    pub probe_delay_ns: f64,
    pub lifetime_ns: f64,
    pub pump_rate_per_s: f64,
    pub pi_fraction: f64,
    pub initial: InitialPopulation,
    pub sweep_b_gauss: Vec<f64>,
}

impl Default for PumpSection {
    fn default() -> Self {
        let s = PumpSimulation::default();
        PumpSection {
            b_gauss: 0.3,
            field_angle_deg: 90.0,
            pump_ns: s.pump_ns,
            free_ns: s.free_ns,
            dt_ns: s.dt_ns,
            probe_delay_ns: s.probe_delay_ns,
            lifetime_ns: s.lifetime_ns,
            pump_rate_per_s: s.drive.rate_per_s,
            pi_fraction: s.drive.pi_fraction,
            initial: s.initial,
            sweep_b_gauss: (0..=20).map(|i| 0.5 * i as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub plate_x_mm: f64,
    pub plate_y_mm: f64,
    pub gap_mm: f64,
    pub gap_sigma_mm: f64,
    pub hole_diameter_mm: f64,
    pub tilt_arcmin: f64,
    pub voltage_v: f64,
    pub drive: PlateDrive,
    pub spacing_mm: f64,
    pub tolerance: f64,
    pub box_margin_gaps: f64,
    pub max_iterations: usize,
    pub uniformity_half_extent_mm: f64,
    /// Tilt used for the sensitivity line of the report; 0 skips it.
    pub tilt_check_arcmin: f64,
    /// Lattice spacing of the tilt check, which solves three extra maps.
    pub tilt_check_spacing_mm: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        let g = CapacitorGeometry::default();
        let o = SolverOptions::default();
        FieldSection {
            plate_x_mm: g.plate_x_mm,
            plate_y_mm: g.plate_y_mm,
            gap_mm: g.gap_mm,
            gap_sigma_mm: g.gap_sigma_mm,
            hole_diameter_mm: g.hole_diameter_mm,
            tilt_arcmin: g.tilt_arcmin,
            voltage_v: g.voltage_v,
            drive: g.drive,
            spacing_mm: o.spacing_mm,
            tolerance: o.tolerance,
            box_margin_gaps: o.box_margin_gaps,
            max_iterations: o.max_iterations,
            uniformity_half_extent_mm: 1.0,
            tilt_check_arcmin: 15.0,
            tilt_check_spacing_mm: 0.45,
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.extract.input_dir);
        rebase(&mut cfg.transition.pulse_csv);
        Ok(cfg)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn transition(&self) -> anyhow::Result<TransitionConfig> {
        let t = &self.transition;
        let s = |m| HyperfineSublevel::rb87_int(FineLevel::P32, 3, m).expect("valid sublevel");
        let pulse = match &t.pulse_csv {
            Some(p) => PulseProfile::load(p).map_err(|e| bad(format!("pulse_csv {}: {e}", p.display())))?,
            None if t.pulse_duration_ns == 0.0 => PulseProfile::Delta,
            None => PulseProfile::Rectangular { duration_ns: t.pulse_duration_ns },
        };
        let tc = TransitionConfig {
            excitation: ExcitationConfig {
                ground_populations: vec![(s(3), t.stretched_population), (s(2), t.neighbor_population)],
                probe: ProbePolarization::SigmaPlus,
                tilt_deg: t.probe_tilt_deg,
                projection: t.projection,
            },
            hyperfine_offsets_mhz: t.hyperfine_offsets_mhz.clone(),
            natural_fwhm_mhz: t.natural_fwhm_mhz,
            pulse,
            dwell_s: t.dwell_s,
            peak_rate_cps: t.peak_rate_cps,
            background_cps: t.background_cps,
            noise: t.noise,
        };
        tc.validate().map_err(|e| bad(format!("[transition] {e}")))?;
        Ok(tc)
    }

    pub fn pipeline(&self) -> anyhow::Result<PipelineConfig> {
        let mut p = PipelineConfig::rb87();
        p.transition = self.transition()?;
        let sim = &self.simulate;
        p.fields_kv_per_cm = sim.fields_kv_per_cm.clone();
        p.grid_mhz = uniform_grid(sim.grid_start_mhz, sim.grid_stop_mhz, sim.grid_step_mhz)
            .map_err(|e| bad(format!("[simulate] grid: {e}")))?;
        p.lines = sim.lines.iter().map(|l| LineSpec::new(l.level, l.f, l.probe)).collect();
        let ex = &self.extract;
        p.fit_shape = LineShape::new(ex.line_model, p.transition.pulse.clone());
        p.equations = EquationOptions { composition: ex.composition, ground: ex.ground };
        p.guess_window_mhz = ex.guess_window_mhz;
        p.guess_width_mhz = ex.guess_width_mhz;
        for l in &p.lines {
            if !matches!(l.level, FineLevel::D32 | FineLevel::D52) {
                return Err(bad(format!("[simulate] line {}: level must be d32 or d52", l.label())));
            }
            p.transition.offset(l.level, 2 * l.f).map_err(|e| bad(format!("[simulate] line {}: {e}", l.label())))?;
        }
        p.validate().map_err(|e| bad(format!("[simulate] {e}")))?;
        Ok(p)
    }

    pub fn budget(&self) -> UncertaintyBudget {
        match self.extract.budget {
            BudgetChoice::Rb87_5d => UncertaintyBudget::rb87_5d(),
            BudgetChoice::None => UncertaintyBudget::zero(),
        }
    }

    pub fn pump(&self) -> anyhow::Result<(MagneticField, PumpSimulation)> {
        let p = &self.pump;
        let sim = PumpSimulation {
            drive: PumpDrive { on: true, rate_per_s: p.pump_rate_per_s, pi_fraction: p.pi_fraction },
            pump_ns: p.pump_ns,
            free_ns: p.free_ns,
            dt_ns: p.dt_ns,
            probe_delay_ns: p.probe_delay_ns,
            lifetime_ns: p.lifetime_ns,
            initial: p.initial,
        };
        sim.validate().map_err(|e| bad(format!("[pump] {e}")))?;
        let field = MagneticField::new(p.b_gauss, p.field_angle_deg.to_radians()).map_err(|e| bad(format!("[pump] {e}")))?;
        if p.sweep_b_gauss.is_empty() {
            return Err(bad("[pump] sweep_b_gauss must not be empty"));
        }
        for &b in &p.sweep_b_gauss {
            MagneticField::new(b, field.alpha_rad).map_err(|e| bad(format!("[pump] sweep_b_gauss: {e}")))?;
        }
        Ok((field, sim))
    }

    pub fn geometry(&self) -> anyhow::Result<(CapacitorGeometry, SolverOptions)> {
        let f = &self.field;
        let g = CapacitorGeometry {
            plate_x_mm: f.plate_x_mm,
            plate_y_mm: f.plate_y_mm,
            gap_mm: f.gap_mm,
            gap_sigma_mm: f.gap_sigma_mm,
            hole_diameter_mm: f.hole_diameter_mm,
            tilt_arcmin: f.tilt_arcmin,
            voltage_v: f.voltage_v,
            drive: f.drive,
        };
        g.validate().map_err(|e| bad(format!("[field] {e}")))?;
        let o = SolverOptions {
            spacing_mm: f.spacing_mm,
            tolerance: f.tolerance,
            box_margin_gaps: f.box_margin_gaps,
            max_iterations: f.max_iterations,
            ..SolverOptions::default()
        };
        let limit = g.gap_mm / 20.0;
        for (name, h) in [("spacing_mm", f.spacing_mm), ("tilt_check_spacing_mm", f.tilt_check_spacing_mm)] {
            if !(h > 0.0 && h <= limit) {
                return Err(bad(format!("[field] {name} = {h} must be in (0, gap/20 = {limit:.4}]")));
            }
        }
        if !(f.uniformity_half_extent_mm > 0.0) {
            return Err(bad("[field] uniformity_half_extent_mm must be > 0"));
        }
        Ok((g, o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("[pump]\nb_tesla = 1.0\n").unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().unwrap().0.contains("b_tesla"));
    }

    #[test]
    fn default_pipeline_matches_library_defaults() {
        assert_eq!(RunConfig::default().pipeline().unwrap(), PipelineConfig::rb87());
    }
}
