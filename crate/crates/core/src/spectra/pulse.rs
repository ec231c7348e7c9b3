use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spectral intensity profile of the probe pulse (frequency in MHz).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseProfile {
    /// Infinitely long pulse; no extra broadening.
    Delta,
    /// Rectangular pulse, squared-sinc spectrum.
    Rectangular { duration_ns: f64 },
    /// Measured density on a strictly increasing frequency grid, normalized to unit area.
    Tabulated { freq_mhz: Vec<f64>, density: Vec<f64> },
}

impl Default for PulseProfile {
    fn default() -> Self {
        PulseProfile::Rectangular { duration_ns: 50.0 }
    }
}

/// Squared-sinc spectrum of a rectangular pulse of the given duration.
pub fn pulse_spectrum(duration_ns: f64) -> Result<PulseProfile> {
    if !(duration_ns.is_finite() && duration_ns > 0.0) {
        return Err(Error::InvalidConfig(format!("pulse duration {duration_ns} ns must be > 0")));
    }
    Ok(PulseProfile::Rectangular { duration_ns })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

impl PulseProfile {
    pub fn tabulated(freq_mhz: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if freq_mhz.len() != density.len() || freq_mhz.len() < 3 {
            return Err(Error::Parse("pulse table needs at least 3 rows of equal length".into()));
        }
        if freq_mhz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parse("pulse table frequencies must be strictly increasing".into()));
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Parse("pulse table densities must be finite and >= 0".into()));
        }
        let area = trapezoid(&freq_mhz, &density);
        if area <= 0.0 {
            return Err(Error::Parse("pulse table has zero area".into()));
        }
        let density = density.into_iter().map(|d| d / area).collect();
        Ok(PulseProfile::Tabulated { freq_mhz, density })
    }

    /// Reads a two-column CSV with header `freq_mhz,density`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["freq_mhz", "density"] {
            return Err(Error::Parse(format!("expected header freq_mhz,density, got {headers:?}")));
        }
        let (mut f, mut d) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad pulse table row {rec:?}")))
            };
            f.push(num(0)?);
            d.push(num(1)?);
        }
        Self::tabulated(f, d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Spectral density at frequency offset `f_mhz`; unit area.
    pub fn density(&self, f_mhz: f64) -> f64 {
        match self {
            PulseProfile::Delta => {
                if f_mhz == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PulseProfile::Rectangular { duration_ns } => {
                let tau = duration_ns * 1e-3;
                tau * sinc(PI * f_mhz * tau).powi(2)
            }
            PulseProfile::Tabulated { freq_mhz, density } => interpolate(freq_mhz, density, f_mhz),
        }
    }

    /// Full width at half maximum of the main lobe, MHz.
    pub fn fwhm(&self) -> f64 {
        match self {
            PulseProfile::Delta => 0.0,
            PulseProfile::Rectangular { duration_ns } => {
                // sinc²(x) = 1/2 at x = 1.391557...
                2.0 * 1.391_557_377_256_7 / (PI * duration_ns * 1e-3)
            }
            PulseProfile::Tabulated { freq_mhz, density } => {
                let (imax, peak) = density
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
                let half = peak / 2.0;
                let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
                    for i in range {
                        let j = (i as isize - step) as usize;
                        if density[i] <= half {
                            let t = (half - density[i]) / (density[j] - density[i]);
                            return freq_mhz[i] + t * (freq_mhz[j] - freq_mhz[i]);
                        }
                    }
                    if step > 0 {
                        freq_mhz[freq_mhz.len() - 1]
                    } else {
                        freq_mhz[0]
                    }
                };
                let hi = cross(&mut (imax + 1..freq_mhz.len()), 1);
                let lo = cross(&mut (0..imax).rev(), -1);
                hi - lo
            }
        }
    }
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    if at < x[0] || at > x[x.len() - 1] {
        return 0.0;
    }
    let i = x.partition_point(|&v| v <= at).clamp(1, x.len() - 1);
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + t * (y[i] - y[i - 1])
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}
