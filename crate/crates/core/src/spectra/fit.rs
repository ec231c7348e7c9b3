use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::lineshape::{LineModel, LineShape};
use super::record::SpectrumRecord;
use crate::stark::StarkCoefficient;
use crate::{Error, Result};

type Mat6 = SMatrix<f64, 6, 6>;
type Vec6 = SVector<f64, 6>;

/// Solver settings for [`fit_spectrum`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative parameter change that counts as converged.
    pub tolerance: f64,
    /// Minimum distance between the two peaks picked for the automatic guess.
    pub min_separation_mhz: f64,
    /// Lower bound on fitted widths. A component too weak to constrain its
    /// width settles on this bound instead of collapsing to zero width.
    /// Centers are kept inside the grid.
    pub min_width_mhz: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iterations: 200, tolerance: 1e-8, min_separation_mhz: 20.0, min_width_mhz: 0.5 }
    }
}

/// Outcome of a two-component fit, components sorted by center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFitResult {
    pub model: LineModel,
    pub amplitudes: [f64; 2],
    pub centers: [f64; 2],
    pub widths: [f64; 2],
    /// Parameter order (a1, c1, w1, a2, c2, w2).
    pub covariance: [[f64; 6]; 6],
    pub chi_square: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LineFitResult {
    pub fn params(&self) -> [f64; 6] {
        [
            self.amplitudes[0],
            self.centers[0],
            self.widths[0],
            self.amplitudes[1],
            self.centers[1],
            self.widths[1],
        ]
    }

    pub fn center_sigma(&self, component: usize) -> f64 {
        let k = 3 * component + 1;
        self.covariance[k][k].max(0.0).sqrt()
    }
}

struct Problem<'a> {
    shape: &'a LineShape,
    x: &'a [f64],
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Problem<'_> {
    fn model(&self, p: &[f64; 6]) -> Result<Vec<f64>> {
        self.x.iter().map(|&x| self.shape.eval(p, x)).collect()
    }

    fn cost(&self, p: &[f64; 6]) -> Result<f64> {
        let m = self.model(p)?;
        Ok(m.iter().zip(&self.y).zip(&self.w).map(|((m, y), w)| w * (y - m).powi(2)).sum())
    }

    fn jacobian(&self, p: &[f64; 6]) -> Result<Vec<[f64; 6]>> {
        let mut jac = vec![[0.0; 6]; self.x.len()];
        for j in 0..6 {
            let h = 1e-6 * scale(p, j);
            let (mut hi, mut lo) = (*p, *p);
            hi[j] += h;
            lo[j] -= h;
            let (mh, ml) = (self.model(&hi)?, self.model(&lo)?);
            for i in 0..self.x.len() {
                jac[i][j] = (mh[i] - ml[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    fn normal(&self, p: &[f64; 6]) -> Result<(Mat6, Vec6)> {
        let jac = self.jacobian(p)?;
        let m = self.model(p)?;
        let mut a = Mat6::zeros();
        let mut g = Vec6::zeros();
        for (i, row) in jac.iter().enumerate() {
            let r = self.y[i] - m[i];
            for k in 0..6 {
                g[k] += self.w[i] * row[k] * r;
                for l in 0..6 {
                    a[(k, l)] += self.w[i] * row[k] * row[l];
                }
            }
        }
        Ok((a, g))
    }
}

/// Characteristic size of parameter `j`: amplitudes and widths by their
/// own magnitude, centers by the component width.
fn scale(p: &[f64; 6], j: usize) -> f64 {
    let s = match j % 3 {
        1 => p[j].abs().max(p[j + 1].abs()),
        _ => p[j].abs(),
    };
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn check_identifiable(a: &Mat6) -> Result<()> {
    let d: Vec<f64> = (0..6).map(|i| a[(i, i)]).collect();
    if d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::UnidentifiableModel);
    }
    let c = Mat6::from_fn(|i, j| a[(i, j)] / (d[i] * d[j]).sqrt());
    let min = c.symmetric_eigenvalues().min();
    if !(min > 1e-10) {
        return Err(Error::UnidentifiableModel);
    }
    Ok(())
}

/// Deterministic starting point: the two highest well-separated maxima of a
/// 5-point moving average.
pub fn initial_guess(record: &SpectrumRecord, options: &FitOptions) -> Result<[f64; 6]> {
    let x = record.detunings();
    let n = x.len();
    if n < 12 {
        return Err(Error::InvalidConfig(format!("{n} points; at least 12 are needed")));
    }
    let y: Vec<f64> = record.counts().iter().map(|&c| c as f64).collect();
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(2), (i + 2).min(n - 1));
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]).then(a.cmp(&b)));
    let is_local_max = |i: usize| {
        (i == 0 || smooth[i] >= smooth[i - 1]) && (i + 1 == n || smooth[i] >= smooth[i + 1])
    };
    let first = order[0];
    let far = |i: &usize| (x[*i] - x[first]).abs() >= options.min_separation_mhz;
    let second = order
        .iter()
        .copied()
        .find(|i| far(i) && is_local_max(*i))
        .or_else(|| order.iter().copied().find(far))
        .unwrap_or(if first == 0 { n - 1 } else { 0 });

    // half-maximum width of the main peak
    let base = smooth.iter().copied().fold(f64::INFINITY, f64::min);
    let half = base + 0.5 * (smooth[first] - base);
    let mut lo = first;
    while lo > 0 && smooth[lo] > half {
        lo -= 1;
    }
    let mut hi = first;
    while hi + 1 < n && smooth[hi] > half {
        hi += 1;
    }
    let step = (x[n - 1] - x[0]) / (n - 1) as f64;
    let width = (x[hi] - x[lo]).max(2.0 * step);
    let area = |i: usize| ((smooth[i] - base).max(1.0)) * width * std::f64::consts::FRAC_PI_2;
    Ok([area(first), x[first], width, area(second), x[second], width])
}

/// Box constraints keeping each component on the recorded grid.
struct Bounds {
    lo: [f64; 6],
    hi: [f64; 6],
}

impl Bounds {
    fn new(record: &SpectrumRecord, options: &FitOptions) -> Self {
        let x = record.detunings();
        let (x0, x1) = (x[0], x[x.len() - 1]);
        let w_min = options.min_width_mhz.max(0.0);
        let lo = [f64::NEG_INFINITY, x0, w_min];
        let hi = [f64::INFINITY, x1, (x1 - x0).max(w_min)];
        Bounds { lo: [lo[0], lo[1], lo[2], lo[0], lo[1], lo[2]], hi: [hi[0], hi[1], hi[2], hi[0], hi[1], hi[2]] }
    }
}

fn project(p: &mut [f64; 6], b: &Bounds) {
    for ((v, lo), hi) in p.iter_mut().zip(b.lo).zip(b.hi) {
        *v = v.clamp(lo, hi);
    }
}

/// Starting point from approximate centers.
///
/// The stronger component starts at the highest bin within `window_mhz` of
/// its expected position; the weaker one is moved by the same offset, since
/// both components of a level shift by similar amounts.
pub fn guess_near(record: &SpectrumRecord, centers: [f64; 2], window_mhz: f64, width_mhz: f64) -> [f64; 6] {
    let x = record.detunings();
    let y = record.counts();
    let peak = |c: f64| {
        x.iter()
            .zip(y)
            .filter(|(xi, _)| (*xi - c).abs() <= window_mhz)
            .fold((c, 0u64), |best, (xi, yi)| if *yi > best.1 { (*xi, *yi) } else { best })
    };
    let found = [peak(centers[0]), peak(centers[1])];
    let strong = if found[0].1 >= found[1].1 { 0 } else { 1 };
    let delta = found[strong].0 - centers[strong];
    let nearest = |c: f64| {
        let i = x.partition_point(|&v| v < c).min(x.len() - 1);
        y[i]
    };
    let mut out = [0.0; 6];
    for k in 0..2 {
        let (c, h) = if k == strong { found[k] } else { (centers[k] + delta, nearest(centers[k] + delta)) };
        out[3 * k] = (h.max(1) as f64) * width_mhz * std::f64::consts::FRAC_PI_2;
        out[3 * k + 1] = c;
        out[3 * k + 2] = width_mhz;
    }
    out
}

/// Weighted nonlinear least squares of a two-component model.
///
/// Uses Levenberg-Marquardt damping with a central-difference Jacobian and
/// Poisson weights 1/max(counts, 1). The covariance is the inverse of the
/// weighted normal matrix at the optimum.
pub fn fit_spectrum(
    record: &SpectrumRecord,
    shape: &LineShape,
    initial: Option<[f64; 6]>,
    options: &FitOptions,
) -> Result<LineFitResult> {
    if record.len() < 12 {
        return Err(Error::InvalidConfig(format!("{} points; at least 12 are needed", record.len())));
    }
    let mut p = match initial {
        Some(p) => p,
        None => initial_guess(record, options)?,
    };
    if p[2] <= 0.0 || p[5] <= 0.0 {
        return Err(Error::DegenerateWidth);
    }
    let bounds = Bounds::new(record, options);
    project(&mut p, &bounds);
    let y: Vec<f64> = record.counts().iter().map(|&c| c as f64).collect();
    let w = y.iter().map(|&c| 1.0 / c.max(1.0)).collect();
    let prob = Problem { shape, x: record.detunings(), y, w };

    let (mut a, mut g) = prob.normal(&p)?;
    check_identifiable(&a)?;
    let mut cost = prob.cost(&p)?;
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    'outer: while iterations < options.max_iterations {
        iterations += 1;
        loop {
            let mut damped = a;
            for k in 0..6 {
                damped[(k, k)] += lambda * a[(k, k)];
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    return Err(Error::UnidentifiableModel);
                }
                continue;
            };
            let mut trial = p;
            for k in 0..6 {
                trial[k] += step[k];
            }
            project(&mut trial, &bounds);
            let new_cost = prob.cost(&trial)?;
            if new_cost <= cost {
                let rel = (0..6).map(|k| (trial[k] - p[k]).abs() / scale(&p, k)).fold(0.0, f64::max);
                p = trial;
                cost = new_cost;
                lambda = (lambda / 10.0).max(1e-12);
                if rel < options.tolerance {
                    converged = true;
                    break 'outer;
                }
                (a, g) = prob.normal(&p)?;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // no downhill step left at machine precision
                converged = true;
                break 'outer;
            }
        }
    }

    let (a_final, _) = prob.normal(&p)?;
    check_identifiable(&a_final)?;
    let cov = a_final.try_inverse().ok_or(Error::UnidentifiableModel)?;

    let order: [usize; 2] = if p[1] <= p[4] { [0, 1] } else { [1, 0] };
    let idx = |k: usize| 3 * order[k / 3] + k % 3;
    let mut covariance = [[0.0; 6]; 6];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 0.5 * (cov[(idx(i), idx(j))] + cov[(idx(j), idx(i))]);
        }
    }
    Ok(LineFitResult {
        model: shape.model,
        amplitudes: [p[3 * order[0]], p[3 * order[1]]],
        centers: [p[3 * order[0] + 1], p[3 * order[1] + 1]],
        widths: [p[3 * order[0] + 2], p[3 * order[1] + 2]],
        covariance,
        chi_square: cost,
        converged,
        iterations,
    })
}

/// One point of a field scan: field (kV/cm), shift (MHz), one-sigma error (MHz).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftPoint {
    pub field_kv_per_cm: f64,
    pub shift_mhz: f64,
    pub sigma_mhz: f64,
}

/// Weighted fit of Δf = pE² through the origin.
///
/// Returns the signed coefficient; its standard error comes from the point
/// errors alone.
pub fn fit_parabola(points: &[ShiftPoint]) -> Result<StarkCoefficient> {
    let (mut swe4, mut swe2f) = (0.0, 0.0);
    for pt in points {
        if !(pt.sigma_mhz > 0.0 && pt.sigma_mhz.is_finite()) {
            return Err(Error::InvalidConfig(format!("shift error {} MHz must be > 0", pt.sigma_mhz)));
        }
        let w = pt.sigma_mhz.powi(-2);
        let e2 = pt.field_kv_per_cm.powi(2);
        swe4 += w * e2 * e2;
        swe2f += w * e2 * pt.shift_mhz;
    }
    if !(swe4 > 0.0) {
        return Err(Error::NoFieldLeverArm);
    }
    Ok(StarkCoefficient { p: swe2f / swe4, sigma_p: swe4.powf(-0.5) })
}
