use std::path::{Path, PathBuf};

use anyhow::Context;
use rbstark::angular::{excitation_probabilities, FineLevel, ProbePolarization};
use rbstark::extraction::{
    build_equation, equations_to_toml, extract_from_spectra, quadrature_budget, synthesize_set, write_alpha_table,
    write_p_table, EquationOptions, LineSpec, SpectrumKey,
};
use rbstark::field::{solve_laplace_with, tilt_sensitivity, SlicePlane, SolverOptions};
use rbstark::par::ExecMode;
use rbstark::pumping::{field_sweep, simulate_with, write_sweep_csv};
use rbstark::spectra::SpectrumRecord;
use rbstark::stark::ReferenceData;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RunConfig};
use crate::plot::{line_plot, Series};
use crate::report::Run;

pub const SPECTRUM_INDEX: &str = "spectra/index.csv";

#[derive(Debug, Serialize, Deserialize)]
struct IndexRow {
    level: FineLevel,
    probe: ProbePolarization,
    field_kv_per_cm: f64,
    file: String,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))
}

/// Synthetic spectra, one CSV per (level, probe, field), plus an index.
pub fn simulate(cfg: &RunConfig, run: &mut Run, prefix: &str, plot: bool) -> anyhow::Result<()> {
    let p = cfg.pipeline()?;
    let set = synthesize_set(&p, cfg.seed)?;
    let mut index = Vec::new();
    for (key, rec) in &set {
        let file = format!("spectra/{}.csv", key.file_stem());
        run.write_with(&format!("{prefix}{file}"), |buf| rec.write_csv(buf))?;
        index.push(IndexRow { level: key.level, probe: key.probe, field_kv_per_cm: key.field_kv_per_cm, file });
    }
    run.write(&format!("{prefix}{SPECTRUM_INDEX}"), &csv_bytes(&index)?)?;
    run.note(format!("simulate: {} spectra, {} points each, seed {}", set.len(), p.grid_mhz.len(), cfg.seed));
    if plot {
        for (level, probe) in p.spectrum_kinds() {
            let series: Vec<(String, Vec<(f64, f64)>)> = set
                .iter()
                .filter(|(k, _)| k.level == level && k.probe == probe)
                .map(|(k, r)| {
                    let pts = r.detunings().iter().zip(r.counts()).map(|(&x, &c)| (x, c as f64)).collect();
                    (format!("{} kV/cm", k.field_kv_per_cm), pts)
                })
                .collect();
            let series: Vec<Series> =
                series.iter().map(|(l, pts)| Series { label: l, points: pts.clone(), markers: false }).collect();
            let stem = SpectrumKey { level, probe, field_kv_per_cm: 0.0 }.file_stem();
            let stem = stem.trim_end_matches("_0.000kvcm");
            let svg = line_plot(&format!("{level} {probe:?}"), "detuning (MHz)", "counts", &series)?;
            run.write(&format!("{prefix}plots/{stem}.svg"), svg.as_bytes())?;
        }
    }
    Ok(())
}

fn load_spectra(dir: &Path, run: &mut Run) -> anyhow::Result<Vec<(SpectrumKey, SpectrumRecord)>> {
    let index = [dir.join(SPECTRUM_INDEX), dir.join("index.csv")]
        .into_iter()
        .find(|p| p.is_file())
        .ok_or_else(|| ConfigError(format!("no spectrum index under {}", dir.display())))?;
    run.record_input(&index)?;
    let base = index.parent().and_then(Path::parent).filter(|_| index.ends_with(SPECTRUM_INDEX)).unwrap_or(dir);
    let mut reader = csv::Reader::from_path(&index).with_context(|| format!("reading {}", index.display()))?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let row: IndexRow = row.with_context(|| format!("reading {}", index.display()))?;
        let path: PathBuf = base.join(&row.file);
        run.record_input(&path)?;
        let rec = SpectrumRecord::load(&path).with_context(|| format!("loading {}", path.display()))?;
        out.push((SpectrumKey { level: row.level, probe: row.probe, field_kv_per_cm: row.field_kv_per_cm }, rec));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ShiftRow {
    line: String,
    field_kv_per_cm: f64,
    shift_mhz: f64,
    sigma_mhz: f64,
}

#[derive(Serialize)]
struct FitRow {
    line: String,
    field_kv_per_cm: f64,
    model: &'static str,
    center1_mhz: f64,
    center2_mhz: f64,
    width1_mhz: f64,
    width2_mhz: f64,
    amplitude1: f64,
    amplitude2: f64,
    chi_square: f64,
    converged: bool,
}

/// Fits spectra, builds the line equations and solves for the polarizabilities.
pub fn extract(cfg: &RunConfig, run: &mut Run, prefix: &str, plot: bool) -> anyhow::Result<()> {
    let p = cfg.pipeline()?;
    let spectra = match &cfg.extract.input_dir {
        Some(dir) => load_spectra(dir, run)?,
        None => synthesize_set(&p, cfg.seed)?,
    };
    let outcome = extract_from_spectra(&p, &spectra)?;
    for t in &outcome.traces {
        for (e, _) in t.fits.iter().filter(|(_, f)| !f.converged) {
            run.warn(format!("{} at {e} kV/cm: fit stopped at the iteration limit", t.line.label()));
        }
    }
    let budgeted = outcome.with_budget(&cfg.budget())?;

    run.write_with(&format!("{prefix}p_table.csv"), |b| write_p_table(&outcome.equations, b))?;
    run.write_with(&format!("{prefix}alpha_table.csv"), |b| write_alpha_table(&budgeted, b))?;
    run.write_with(&format!("{prefix}alpha_table_statistical.csv"), |b| write_alpha_table(&outcome.result, b))?;
    run.write(&format!("{prefix}equations.toml"), equations_to_toml(&outcome.equations)?.as_bytes())?;
    let shifts = outcome.traces.iter().flat_map(|t| {
        t.points.iter().map(|pt| ShiftRow {
            line: t.line.label(),
            field_kv_per_cm: pt.field_kv_per_cm,
            shift_mhz: pt.shift_mhz,
            sigma_mhz: pt.sigma_mhz,
        })
    });
    run.write(&format!("{prefix}shifts.csv"), &csv_bytes(shifts)?)?;
    let fits = outcome.traces.iter().flat_map(|t| {
        t.fits.iter().map(|(e, f)| FitRow {
            line: t.line.label(),
            field_kv_per_cm: *e,
            model: f.model.tag(),
            center1_mhz: f.centers[0],
            center2_mhz: f.centers[1],
            width1_mhz: f.widths[0],
            width2_mhz: f.widths[1],
            amplitude1: f.amplitudes[0],
            amplitude2: f.amplitudes[1],
            chi_square: f.chi_square,
            converged: f.converged,
        })
    });
    run.write(&format!("{prefix}fits.csv"), &csv_bytes(fits)?)?;

    for e in &outcome.equations {
        run.note(format!("{}: p = {:.4} ± {:.4} MHz/(kV/cm)²", e.line.label(), e.coefficient.p, e.coefficient.sigma_p));
    }
    for lr in &budgeted.levels {
        run.note(format!(
            "{}: alpha_S = {:.1} ± {:.1} a.u., alpha_T = {:.1} ± {:.1} a.u.",
            lr.level, lr.pair.alpha_s, lr.sigma_s, lr.pair.alpha_t, lr.sigma_t
        ));
    }

    if plot {
        for (t, e) in outcome.traces.iter().zip(&outcome.equations) {
            let e_max = t.points.iter().map(|pt| pt.field_kv_per_cm).fold(0.0, f64::max);
            let curve = (0..=50).map(|i| {
                let x = e_max * i as f64 / 50.0;
                (x, e.coefficient.p * x * x)
            });
            let series = [
                Series {
                    label: "measured shift",
                    points: t.points.iter().map(|pt| (pt.field_kv_per_cm, pt.shift_mhz)).collect(),
                    markers: true,
                },
                Series { label: "p E²", points: curve.collect(), markers: false },
            ];
            let svg = line_plot(&t.line.label(), "field (kV/cm)", "shift (MHz)", &series)?;
            let stem = format!("parabola_{}_f{}_{:?}", level_tag(t.line.level), t.line.f, t.line.probe).to_lowercase();
            run.write(&format!("{prefix}plots/{stem}.svg"), svg.as_bytes())?;
        }
    }
    Ok(())
}

fn level_tag(level: FineLevel) -> &'static str {
    match level {
        FineLevel::D32 => "d32",
        FineLevel::D52 => "d52",
        FineLevel::P32 => "p32",
        FineLevel::S12 => "s12",
        _ => "other",
    }
}

/// Pumping time series at one field and the final-fraction sweep.
pub fn pump(cfg: &RunConfig, run: &mut Run, prefix: &str, plot: bool) -> anyhow::Result<()> {
    let (field, sim) = cfg.pump()?;
    let series = simulate_with(&field, &sim)?;
    run.write_with(&format!("{prefix}time_series.csv"), |b| series.write_csv(b))?;
    let sweep = field_sweep(&cfg.pump.sweep_b_gauss, field.alpha_rad, &sim, ExecMode::Parallel)?;
    run.write_with(&format!("{prefix}sweep.csv"), |b| write_sweep_csv(&sweep, b))?;

    run.note(format!(
        "pump: stretched fraction {:.4} at {} G, read {} ns after the pump",
        series.final_stretched_fraction(),
        field.b_gauss,
        sim.probe_delay_ns
    ));
    for pt in &sweep {
        if [0.0, 0.3, 2.0, 10.0].contains(&pt.b_gauss) {
            run.note(format!("pump sweep: {} G -> {:.4}", pt.b_gauss, pt.final_stretched_fraction));
        }
    }
    let mut sorted: Vec<_> = sweep.iter().collect();
    sorted.sort_by(|a, b| a.b_gauss.total_cmp(&b.b_gauss));
    if sorted.windows(2).any(|w| w[1].final_stretched_fraction > w[0].final_stretched_fraction + 1e-12) {
        run.warn("final stretched fraction is not monotone in B over the sweep");
    }

    if plot {
        let stretched = series.times_ns.iter().zip(&series.fractions).map(|(&t, f)| (t, *f.last().unwrap_or(&0.0)));
        let svg = line_plot(
            &format!("pumping at {} G", field.b_gauss),
            "time (ns)",
            "stretched fraction",
            &[Series { label: "mF = +F", points: stretched.collect(), markers: false }],
        )?;
        run.write(&format!("{prefix}plots/time_series.svg"), svg.as_bytes())?;
        let pts = sorted.iter().map(|p| (p.b_gauss, p.final_stretched_fraction)).collect();
        let svg = line_plot(
            "final stretched fraction",
            "B (G)",
            "fraction",
            &[Series { label: "sweep", points: pts, markers: true }],
        )?;
        run.write(&format!("{prefix}plots/sweep.svg"), svg.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    quantity: String,
    value: f64,
    unit: &'static str,
}

/// Relaxation solve of the capacitor with slices and a scalar report.
pub fn field(cfg: &RunConfig, run: &mut Run, prefix: &str, plot: bool) -> anyhow::Result<()> {
    let (g, o) = cfg.geometry()?;
    let map = solve_laplace_with(&g, &o)?;
    let e0 = map.central_field_v_per_cm();
    let nominal = g.nominal_field_v_per_cm();
    let half = cfg.field.uniformity_half_extent_mm;
    let uniformity = map.uniformity(half)?;
    let row = |q: String, value: f64, unit| ReportRow { quantity: q, value, unit };
    let mut rows = vec![
        row("central_field".into(), e0, "V/cm"),
        row("nominal_field".into(), nominal, "V/cm"),
        row("relative_deviation".into(), if nominal != 0.0 { e0 / nominal - 1.0 } else { 0.0 }, "1"),
        row(format!("uniformity_within_{half}mm"), uniformity, "1"),
        row("spacing".into(), map.spacing_mm(), "mm"),
        row("sweeps".into(), map.iterations() as f64, "1"),
    ];
    for l in &map.levels {
        rows.push(row(format!("central_field_at_{}mm", l.spacing_mm), l.central_field_v_per_cm, "V/cm"));
    }
    run.note(format!(
        "field: E(0) = {e0:.3} V/cm (V/l = {nominal:.3}), uniformity within ±{half} mm = {:.4}%",
        100.0 * uniformity
    ));
    if cfg.field.tilt_check_arcmin != 0.0 {
        let coarse = SolverOptions { spacing_mm: cfg.field.tilt_check_spacing_mm, ..o };
        let s = tilt_sensitivity(&g, cfg.field.tilt_check_arcmin, &coarse)?;
        rows.push(row(format!("tilt_{}arcmin_relative_change", cfg.field.tilt_check_arcmin), s, "1"));
        run.note(format!("field: {}' tilt changes E(0) by {:+.2e}", cfg.field.tilt_check_arcmin, s));
    }
    if uniformity > 5e-4 {
        run.warn(format!("uniformity {:.3}% exceeds 0.05%", 100.0 * uniformity));
    }
    run.write(&format!("{prefix}report.csv"), &csv_bytes(rows)?)?;
    run.write_with(&format!("{prefix}slice_xz_y0.csv"), |b| map.write_slice_csv(SlicePlane::Xz, 0.0, b))?;
    run.write_with(&format!("{prefix}slice_xy_z0.csv"), |b| map.write_slice_csv(SlicePlane::Xy, 0.0, b))?;
    run.write_with(&format!("{prefix}grid_xz.csv"), |b| map.write_grid_csv(b))?;

    if plot {
        let n = 200;
        let along = |lo: f64, hi: f64, at: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
            (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).map(|s| (s, at(s))).collect()
        };
        let hz = 0.49 * g.gap_mm;
        let z = along(-hz, hz, &|z| map.field_at(0.0, 0.0, z));
        let hx = 0.5 * g.plate_x_mm;
        let x = along(-hx, hx, &|x| map.field_at(x, 0.0, 0.0));
        let svg = line_plot("field on the axis", "z (mm)", "E (V/cm)", &[Series { label: "x = y = 0", points: z, markers: false }])?;
        run.write(&format!("{prefix}plots/field_z.svg"), svg.as_bytes())?;
        let svg = line_plot("field in the mid plane", "x (mm)", "E (V/cm)", &[Series { label: "y = z = 0", points: x, markers: false }])?;
        run.write(&format!("{prefix}plots/field_x.svg"), svg.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ExcitationRow {
    level: String,
    probe: ProbePolarization,
    f: String,
    m_f: String,
    probability: f64,
}

#[derive(Serialize)]
struct ReportedRow {
    line: String,
    p_reported: f64,
    sigma_p: f64,
    p_predicted: f64,
}

/// Excitation probabilities, the error budget and the reported line sensitivities.
pub fn tables(cfg: &RunConfig, run: &mut Run, prefix: &str, _plot: bool) -> anyhow::Result<()> {
    let base = cfg.transition()?.excitation;
    let mut rows = Vec::new();
    for level in [FineLevel::D52, FineLevel::D32] {
        for probe in [ProbePolarization::SigmaPlus, ProbePolarization::SigmaMinus] {
            let ex = rbstark::angular::ExcitationConfig { probe, ..base.clone() };
            for (s, prob) in excitation_probabilities(&ex, level)? {
                rows.push(ExcitationRow {
                    level: level.to_string(),
                    probe,
                    f: s.f.to_string(),
                    m_f: s.m_f.to_string(),
                    probability: prob,
                });
            }
        }
    }
    run.write(&format!("{prefix}excitation_table.csv"), &csv_bytes(rows)?)?;

    let budget = cfg.budget();
    let total = quadrature_budget(&budget);
    let mut lines: Vec<(String, f64)> = budget.entries.iter().map(|e| (e.name.clone(), e.percent)).collect();
    lines.push(("total (quadrature)".into(), total));
    run.write(&format!("{prefix}budget.csv"), &csv_bytes(lines.iter().map(|(n, p)| [n.clone(), format!("{p}")]))?)?;
    run.note(format!("budget: quadrature total {total:.3}%"));

    let r = ReferenceData::rb87();
    let opts = EquationOptions { composition: cfg.extract.composition, ground: cfg.extract.ground };
    let mut reported = Vec::new();
    for s in &r.sensitivities {
        let line = LineSpec::new(s.level, s.f, s.probe);
        let ex = rbstark::angular::ExcitationConfig { probe: s.probe, ..base.clone() };
        let eq = build_equation(s.coefficient, line, &ex, r.ground_5p32.pair(), opts)?;
        let measured = r.measured(s.level).context("reference level missing")?.pair();
        reported.push(ReportedRow {
            line: line.label(),
            p_reported: s.coefficient.p,
            sigma_p: s.coefficient.sigma_p,
            p_predicted: eq.predict(&measured),
        });
    }
    run.write(&format!("{prefix}reported_p.csv"), &csv_bytes(reported)?)?;
    Ok(())
}

type Stage = fn(&RunConfig, &mut Run, &str, bool) -> anyhow::Result<()>;

/// Every verb with default settings into one bundle. Stages keep running after
/// a failure; the first error decides the exit code.
pub fn bundle(cfg: &RunConfig, run: &mut Run, plot: bool) -> anyhow::Result<()> {
    let mut chained = cfg.clone();
    chained.extract.input_dir = Some(run.root().join("simulate"));
    let stages: [(&str, &RunConfig, Stage); 5] = [
        ("tables", cfg, tables),
        ("simulate", cfg, simulate),
        ("extract", &chained, extract),
        ("pump", cfg, pump),
        ("field", cfg, field),
    ];
    let mut first: Option<anyhow::Error> = None;
    for (name, c, stage) in stages {
        if let Err(e) = stage(c, run, &format!("{name}/"), plot) {
            run.warn(format!("stage {name} failed: {e:#}"));
            first.get_or_insert(e.context(format!("stage {name}")));
        }
    }
    first.map_or(Ok(()), Err)
}
