use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::state::{larmor_propagator, MagneticField, PumpState, C64};
use crate::angular::{transition_strength, FineLevel, HalfInteger, HyperfineSublevel, Polarization};
use crate::par::{self, ExecMode};
use crate::{Error, Result};

/// Effective pump light acting on the 5S1/2 F=2 → 5P3/2 F=3 cycling transition.
///
/// One pump cycle is an excitation followed by spontaneous decay, collapsed
/// into a single redistribution among the 5P3/2 F=3 sublevels at
/// `rate_per_s`. A fraction `pi_fraction` of the re-excitation goes through
/// π light, which is what keeps the B = 0 steady state below a pure
/// stretched state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpDrive {
    pub on: bool,
    pub rate_per_s: f64,
    pub pi_fraction: f64,
}

impl Default for PumpDrive {
    fn default() -> Self {
        PumpDrive { on: true, rate_per_s: 2.0e8, pi_fraction: 0.019_72 }
    }
}

impl PumpDrive {
    pub fn off() -> Self {
        PumpDrive { on: false, ..Default::default() }
    }

    /// Pure σ⁺ drive with the default rate.
    pub fn pure_sigma_plus() -> Self {
        PumpDrive { pi_fraction: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_per_s.is_finite() && self.rate_per_s >= 0.0) {
            return Err(Error::InvalidConfig(format!("pump rate {} /s must be >= 0", self.rate_per_s)));
        }
        if !(0.0..=1.0).contains(&self.pi_fraction) {
            return Err(Error::InvalidConfig(format!("pi fraction {} outside [0, 1]", self.pi_fraction)));
        }
        Ok(())
    }

    fn rate_per_ns(&self) -> f64 {
        if self.on {
            self.rate_per_s * 1e-9
        } else {
            0.0
        }
    }
}

fn sub(level: FineLevel, f: i32, m: i32) -> HyperfineSublevel {
    HyperfineSublevel::rb87_int(level, f, m).expect("cycling-manifold sublevel")
}

/// Column-stochastic redistribution matrix of one pump cycle, M[new][old],
/// over 5P3/2 F=3 sublevels ordered m = -3..3.
pub fn cycle_matrix(pi_fraction: f64) -> DMatrix<f64> {
    let idx = |m: i32| (m + 3) as usize;
    // Decay 5P3/2(3, m') → 5S1/2(2, m_s), branching from the dipole strengths.
    let mut decay = DMatrix::zeros(5, 7);
    for me in -3..=3 {
        let e = sub(FineLevel::P32, 3, me);
        let mut row = [0.0; 5];
        for ms in -2..=2 {
            let q = me - ms;
            if q.abs() <= 1 {
                let pol = Polarization::new(q as i8).expect("|q| <= 1");
                row[(ms + 2) as usize] = transition_strength(&sub(FineLevel::S12, 2, ms), &e, pol);
            }
        }
        let total: f64 = row.iter().sum();
        for (k, v) in row.iter().enumerate() {
            decay[(k, idx(me))] = v / total;
        }
    }
    // Re-excitation 5S1/2(2, m_s) → 5P3/2(3, m_s + q) with q = +1 or 0.
    let mut excite = DMatrix::zeros(7, 5);
    for ms in -2..=2 {
        let g = sub(FineLevel::S12, 2, ms);
        let plus = (1.0 - pi_fraction) * transition_strength(&g, &sub(FineLevel::P32, 3, ms + 1), Polarization::SIGMA_PLUS);
        let pi = pi_fraction * transition_strength(&g, &sub(FineLevel::P32, 3, ms), Polarization::PI);
        let total = plus + pi;
        excite[(idx(ms + 1), (ms + 2) as usize)] = plus / total;
        excite[(idx(ms), (ms + 2) as usize)] += pi / total;
    }
    excite * decay
}

/// Precomputed action of the pump over a fixed step.
#[derive(Clone, Debug)]
struct PumpPropagator {
    populations: DMatrix<f64>,
    coherence_damping: f64,
}

impl PumpPropagator {
    fn new(drive: &PumpDrive, dt_ns: f64) -> Self {
        let r = drive.rate_per_ns();
        let m = cycle_matrix(drive.pi_fraction);
        let generator = (m - DMatrix::identity(7, 7)) * (r * dt_ns);
        PumpPropagator { populations: generator.exp(), coherence_damping: (-r * dt_ns).exp() }
    }

    fn apply(&self, rho: &mut DMatrix<C64>) {
        let p = DVector::from_iterator(7, (0..7).map(|i| rho[(i, i)].re));
        let p = &self.populations * p;
        for a in 0..7 {
            for b in 0..7 {
                if a == b {
                    rho[(a, a)] = C64::new(p[a], 0.0);
                } else {
                    rho[(a, b)] *= self.coherence_damping;
                }
            }
        }
    }
}

fn check_cycling(state: &PumpState) -> Result<()> {
    if state.f() != HalfInteger::int(3) {
        return Err(Error::InvalidConfig(format!("pumping acts on the F = 3 manifold, got F = {}", state.f())));
    }
    Ok(())
}

/// Advances the sublevel populations by one pump step of `dt_ns`.
///
/// Coherences between sublevels are damped at the cycling rate.
pub fn pump_step(state: &PumpState, drive: &PumpDrive, dt_ns: f64) -> Result<PumpState> {
    if !(dt_ns.is_finite() && dt_ns > 0.0) {
        return Err(Error::NonPositiveStep(dt_ns));
    }
    drive.validate()?;
    check_cycling(state)?;
    let mut out = state.clone();
    if drive.on {
        PumpPropagator::new(drive, dt_ns).apply(out.density_mut());
    }
    out.advance(dt_ns);
    Ok(out)
}

/// Starting populations of the pumped manifold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPopulation {
    #[default]
    Uniform,
    Stretched,
}

/// Timing and drive of a pump-then-evolve run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpSimulation {
    pub drive: PumpDrive,
    pub pump_ns: f64,
    pub free_ns: f64,
    pub dt_ns: f64,
    /// Probe time measured from the end of the pump pulse.
    pub probe_delay_ns: f64,
    /// Radiative lifetime draining the manifold once the pump is off.
    pub lifetime_ns: f64,
    pub initial: InitialPopulation,
}

impl Default for PumpSimulation {
    fn default() -> Self {
        PumpSimulation {
            drive: PumpDrive::default(),
            pump_ns: 500.0,
            free_ns: 100.0,
            dt_ns: 1.0,
            probe_delay_ns: 10.0,
            lifetime_ns: 30.0,
            initial: InitialPopulation::Uniform,
        }
    }
}

fn steps(span_ns: f64, dt_ns: f64, what: &str) -> Result<usize> {
    let n = span_ns / dt_ns;
    if !(n.is_finite() && n >= 0.0) || (n - n.round()).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::InvalidConfig(format!("time step {dt_ns} ns does not divide the {what} ({span_ns} ns)")));
    }
    Ok(n.round() as usize)
}

impl PumpSimulation {
    pub fn validate(&self) -> Result<()> {
        self.drive.validate()?;
        if !(self.dt_ns.is_finite() && self.dt_ns > 0.0) {
            return Err(Error::NonPositiveStep(self.dt_ns));
        }
        for (v, name) in [(self.pump_ns, "pump window"), (self.free_ns, "free window"), (self.probe_delay_ns, "probe delay")] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} {v} ns must be >= 0")));
            }
        }
        if self.probe_delay_ns > self.free_ns {
            return Err(Error::InvalidConfig("probe delay exceeds the free window".into()));
        }
        if !(self.lifetime_ns > 0.0) {
            return Err(Error::InvalidConfig(format!("lifetime {} ns must be > 0", self.lifetime_ns)));
        }
        steps(self.pump_ns, self.dt_ns, "pump window")?;
        steps(self.free_ns, self.dt_ns, "free window")?;
        steps(self.probe_delay_ns, self.dt_ns, "probe delay")?;
        Ok(())
    }
}

/// Sublevel populations through a run, normalized to the manifold total.
#[derive(Clone, Debug, PartialEq)]
pub struct PumpSeries {
    pub f: HalfInteger,
    pub times_ns: Vec<f64>,
    pub fractions: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
    pub probe_time_ns: f64,
    probe_index: usize,
}

impl PumpSeries {
    /// Stretched-state fraction seen by the probe.
    pub fn final_stretched_fraction(&self) -> f64 {
        *self.fractions[self.probe_index].last().expect("non-empty manifold")
    }

    /// Stretched-state fraction at the end of the free window.
    pub fn end_stretched_fraction(&self) -> f64 {
        *self.fractions.last().and_then(|f| f.last()).expect("non-empty series")
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t_ns".to_string()];
        header.extend(self.f.projections().map(|m| format!("pop_m{}{}", if m.twice() > 0 { "+" } else { "" }, m)));
        header.push("total".into());
        w.write_record(&header)?;
        for ((t, fr), total) in self.times_ns.iter().zip(&self.fractions).zip(&self.totals) {
            let mut row = vec![t.to_string()];
            row.extend(fr.iter().map(|p| p.to_string()));
            row.push(total.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Pump then free evolution with default timing and drive.
pub fn simulate_pumping(field: &MagneticField, pump_ns: f64, free_ns: f64, dt_ns: f64) -> Result<PumpSeries> {
    let sim = PumpSimulation { pump_ns, free_ns, dt_ns, probe_delay_ns: 10f64.min(free_ns), ..Default::default() };
    simulate_with(field, &sim)
}

/// Strang-split pump and precession steps, then precession with the decay leak.
pub fn simulate_with(field: &MagneticField, sim: &PumpSimulation) -> Result<PumpSeries> {
    sim.validate()?;
    let n_pump = steps(sim.pump_ns, sim.dt_ns, "pump window")?;
    let n_free = steps(sim.free_ns, sim.dt_ns, "free window")?;
    let n_probe = steps(sim.probe_delay_ns, sim.dt_ns, "probe delay")?;

    let mut state = match sim.initial {
        InitialPopulation::Uniform => PumpState::rb87_cycling_uniform(),
        InitialPopulation::Stretched => PumpState::rb87_cycling_stretched(),
    };
    let u = larmor_propagator(state.f(), state.g_f(), field, sim.dt_ns);
    let u_adj = u.adjoint();
    let half = PumpPropagator::new(&sim.drive, sim.dt_ns / 2.0);
    let leak = (-sim.dt_ns / sim.lifetime_ns).exp();

    let mut series = PumpSeries {
        f: state.f(),
        times_ns: Vec::with_capacity(n_pump + n_free + 1),
        fractions: Vec::with_capacity(n_pump + n_free + 1),
        totals: Vec::with_capacity(n_pump + n_free + 1),
        probe_time_ns: sim.pump_ns + sim.probe_delay_ns,
        probe_index: n_pump + n_probe,
    };
    let record = |s: &PumpState, series: &mut PumpSeries| {
        series.times_ns.push(s.time_ns());
        series.fractions.push(s.fractions());
        series.totals.push(s.total());
    };
    record(&state, &mut series);

    for _ in 0..n_pump {
        let rho = state.density_mut();
        if sim.drive.on {
            half.apply(rho);
        }
        *rho = &u * &*rho * &u_adj;
        if sim.drive.on {
            half.apply(rho);
        }
        state.advance(sim.dt_ns);
        record(&state, &mut series);
    }
    for _ in 0..n_free {
        let rho = state.density_mut();
        *rho = (&u * &*rho * &u_adj) * C64::new(leak, 0.0);
        state.advance(sim.dt_ns);
        record(&state, &mut series);
    }
    Ok(series)
}

/// One point of a field sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub b_gauss: f64,
    pub final_stretched_fraction: f64,
}

/// Probe-time stretched fraction for each field magnitude at a fixed angle.
pub fn field_sweep(b_gauss: &[f64], alpha_rad: f64, sim: &PumpSimulation, mode: ExecMode) -> Result<Vec<SweepPoint>> {
    if b_gauss.is_empty() {
        return Err(Error::InvalidConfig("empty field sweep".into()));
    }
    par::map(mode, b_gauss, |&b| {
        let field = MagneticField::new(b, alpha_rad)?;
        let s = simulate_with(&field, sim)?;
        Ok(SweepPoint { b_gauss: b, final_stretched_fraction: s.final_stretched_fraction() })
    })
    .into_iter()
    .collect()
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["B_gauss", "final_stretched_fraction"])?;
    for p in points {
        w.write_record([p.b_gauss.to_string(), p.final_stretched_fraction.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
