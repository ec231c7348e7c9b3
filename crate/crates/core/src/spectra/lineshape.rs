use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::pulse::PulseProfile;
use crate::{Error, Result};

/// Two-component line models.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineModel {
    GaussSum,
    LorentzSum,
    #[default]
    LorentzConvolved,
}

impl LineModel {
    pub const ALL: [LineModel; 3] = [LineModel::GaussSum, LineModel::LorentzSum, LineModel::LorentzConvolved];

    pub fn tag(self) -> &'static str {
        match self {
            LineModel::GaussSum => "gauss_sum",
            LineModel::LorentzSum => "lorentz_sum",
            LineModel::LorentzConvolved => "lorentz_convolved",
        }
    }
}

/// A line model together with the pulse profile used by the convolved variant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LineShape {
    pub model: LineModel,
    pub pulse: PulseProfile,
}

impl LineShape {
    pub fn new(model: LineModel, pulse: PulseProfile) -> Self {
        LineShape { model, pulse }
    }

    /// Unit-area single component of width `w` at offset `x` from its center.
    pub fn unit(&self, x: f64, w: f64) -> Result<f64> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::DegenerateWidth);
        }
        Ok(match self.model {
            LineModel::GaussSum => gaussian(x, w),
            LineModel::LorentzSum => lorentzian(x, w),
            LineModel::LorentzConvolved => convolved(x, w, &self.pulse),
        })
    }

    /// Two-component profile; `params` = (a1, c1, w1, a2, c2, w2), amplitudes are areas.
    pub fn eval(&self, params: &[f64; 6], detuning: f64) -> Result<f64> {
        let first = params[0] * self.unit(detuning - params[1], params[2])?;
        let second = params[3] * self.unit(detuning - params[4], params[5])?;
        Ok(first + second)
    }
}

/// Evaluates one of the two-component models at `detuning`.
pub fn line_profile(shape: &LineShape, params: &[f64; 6], detuning: f64) -> Result<f64> {
    shape.eval(params, detuning)
}

pub fn gaussian(x: f64, fwhm: f64) -> f64 {
    let k = 4.0 * LN_2 / (fwhm * fwhm);
    (k / PI).sqrt() * (-k * x * x).exp()
}

pub fn lorentzian(x: f64, fwhm: f64) -> f64 {
    let h = fwhm / 2.0;
    h / (PI * (x * x + h * h))
}

fn convolved(x: f64, fwhm: f64, pulse: &PulseProfile) -> f64 {
    match pulse {
        PulseProfile::Delta => lorentzian(x, fwhm),
        PulseProfile::Rectangular { duration_ns } => rect_convolved(x, fwhm, duration_ns * 1e-3),
        PulseProfile::Tabulated { freq_mhz, density } => table_convolved(x, fwhm, freq_mhz, density),
    }
}

/// Lorentzian (FWHM Γ) convolved with the squared-sinc spectrum of a
/// rectangular pulse of length τ (μs): 2 Re[1/z − (1 − e^{−zτ})/(τz²)],
/// z = πΓ − 2πi·x.
fn rect_convolved(x: f64, gamma: f64, tau: f64) -> f64 {
    let (zr, zi) = (PI * gamma, -2.0 * PI * x);
    let zt = (zr * tau, zi * tau);
    let mag2 = zt.0 * zt.0 + zt.1 * zt.1;
    if mag2 < 1e-4 {
        // series of τ(1 − (1 − e^{−u})/u)/u with u = zτ
        let mut term = (1.0, 0.0);
        let mut sum = (0.0, 0.0);
        let mut fact = 1.0;
        for k in 0..8 {
            fact *= f64::from(k + 2);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum.0 += sign * term.0 / fact;
            sum.1 += sign * term.1 / fact;
            term = (term.0 * zt.0 - term.1 * zt.1, term.0 * zt.1 + term.1 * zt.0);
        }
        return 2.0 * tau * sum.0;
    }
    let inv_z = (zr / (zr * zr + zi * zi), -zi / (zr * zr + zi * zi));
    let e = (-zt.0).exp();
    let one_minus = (1.0 - e * zt.1.cos(), e * zt.1.sin());
    let inv_z2 = (inv_z.0 * inv_z.0 - inv_z.1 * inv_z.1, 2.0 * inv_z.0 * inv_z.1);
    let prod_re = one_minus.0 * inv_z2.0 - one_minus.1 * inv_z2.1;
    2.0 * (inv_z.0 - prod_re / tau)
}

fn table_convolved(x: f64, gamma: f64, freq: &[f64], density: &[f64]) -> f64 {
    let step = gamma / 10.0;
    let mut sum = 0.0;
    for i in 1..freq.len() {
        let (f0, f1) = (freq[i - 1], freq[i]);
        let n = ((f1 - f0) / step).ceil().max(1.0) as usize;
        let h = (f1 - f0) / n as f64;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let nu = f0 + t * (f1 - f0);
            let d = density[i - 1] + t * (density[i] - density[i - 1]);
            let wgt = if k == 0 || k == n { 0.5 } else { 1.0 };
            sum += wgt * h * d * lorentzian(x - nu, gamma);
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::pulse::trapezoid;

    #[test]
    fn lorentzian_peak_and_gaussian_half_width() {
        assert!((lorentzian(0.0, 5.9) - 2.0 / (PI * 5.9)).abs() < 1e-15);
        let g0 = gaussian(0.0, 7.0);
        assert!((gaussian(3.5, 7.0) / g0 - 0.5).abs() < 1e-14);
        assert!((gaussian(-3.5, 7.0) / g0 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_width_rejected() {
        let s = LineShape::default();
        let p = [1.0, 0.0, 0.0, 1.0, 10.0, 3.0];
        assert!(matches!(s.eval(&p, 0.0), Err(Error::DegenerateWidth)));
        let p = [1.0, 0.0, 2.0, 1.0, 10.0, -3.0];
        assert!(matches!(s.eval(&p, 0.0), Err(Error::DegenerateWidth)));
    }

    #[test]
    fn delta_pulse_matches_lorentz_sum() {
        let c = LineShape::new(LineModel::LorentzConvolved, PulseProfile::Delta);
        let b = LineShape::new(LineModel::LorentzSum, PulseProfile::Delta);
        let p = [100.0, -3.0, 5.9, 40.0, -100.0, 6.5];
        for i in 0..200 {
            let x = -150.0 + i as f64;
            let (vc, vb) = (c.eval(&p, x).unwrap(), b.eval(&p, x).unwrap());
            assert!(((vc - vb) / vb).abs() < 1e-6);
        }
    }

    #[test]
    fn rect_convolution_matches_numerical_quadrature() {
        let pulse = PulseProfile::Rectangular { duration_ns: 50.0 };
        for x in [0.0, 0.5, 4.0, 12.0, 40.0] {
            let closed = rect_convolved(x, 5.9, 0.05);
            // direct convolution on a fine grid
            let nus: Vec<f64> = (0..=400_000).map(|i| -4000.0 + i as f64 * 0.02).collect();
            let vals: Vec<f64> = nus.iter().map(|&nu| pulse.density(nu) * lorentzian(x - nu, 5.9)).collect();
            let num = trapezoid(&nus, &vals);
            assert!(((closed - num) / closed).abs() < 2e-3, "x={x}: {closed} vs {num}");
        }
    }

    #[test]
    fn rect_convolution_tends_to_lorentzian() {
        for x in [0.0, 1.0, 7.0] {
            let long = rect_convolved(x, 5.9, 1e4);
            assert!(((long - lorentzian(x, 5.9)) / lorentzian(x, 5.9)).abs() < 1e-4);
        }
        // small-argument branch agrees with the direct form
        let a = rect_convolved(1e-3, 1e-3, 1e-2);
        let b = rect_convolved(2e-2, 1e-3, 1e-2);
        assert!(a.is_finite() && b.is_finite() && a > 0.0);
    }

    #[test]
    fn convolved_profile_has_unit_area() {
        let shape = LineShape::default();
        let xs: Vec<f64> = (0..=400_000).map(|i| -20_000.0 + i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| shape.unit(x, 5.9).unwrap()).collect();
        assert!((trapezoid(&xs, &ys) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tabulated_triangle_close_to_rectangular() {
        let rect = PulseProfile::Rectangular { duration_ns: 50.0 };
        let f: Vec<f64> = (0..=2000).map(|i| -200.0 + i as f64 * 0.2).collect();
        let d: Vec<f64> = f.iter().map(|&x| rect.density(x)).collect();
        let table = PulseProfile::tabulated(f, d).unwrap();
        let a = LineShape::new(LineModel::LorentzConvolved, rect);
        let b = LineShape::new(LineModel::LorentzConvolved, table);
        let (va, vb) = (a.unit(0.0, 5.9).unwrap(), b.unit(0.0, 5.9).unwrap());
        assert!(((va - vb) / va).abs() < 0.02, "{va} {vb}");
    }
}
