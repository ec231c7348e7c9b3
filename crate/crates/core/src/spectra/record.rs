use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Photon counts on a detuning grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    detunings_mhz: Vec<f64>,
    counts: Vec<u64>,
    dwell_s: f64,
}

impl SpectrumRecord {
    pub fn new(detunings_mhz: Vec<f64>, counts: Vec<u64>, dwell_s: f64) -> Result<Self> {
        if detunings_mhz.len() != counts.len() {
            return Err(Error::InvalidConfig(format!(
                "{} detunings but {} count values",
                detunings_mhz.len(),
                counts.len()
            )));
        }
        if detunings_mhz.iter().any(|d| !d.is_finite()) || detunings_mhz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("detunings must be finite and strictly increasing".into()));
        }
        if !(dwell_s.is_finite() && dwell_s > 0.0) {
            return Err(Error::InvalidConfig(format!("dwell time {dwell_s} s must be > 0")));
        }
        Ok(SpectrumRecord { detunings_mhz, counts, dwell_s })
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings_mhz
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn dwell_s(&self) -> f64 {
        self.dwell_s
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Same counts on a grid translated by `delta_mhz`.
    pub fn shifted(&self, delta_mhz: f64) -> Self {
        SpectrumRecord {
            detunings_mhz: self.detunings_mhz.iter().map(|d| d + delta_mhz).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["detuning_mhz", "counts", "dwell_s"])?;
        for (d, c) in self.detunings_mhz.iter().zip(&self.counts) {
            w.write_record([d.to_string(), c.to_string(), self.dwell_s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["detuning_mhz", "counts", "dwell_s"] {
            return Err(Error::Parse(format!("expected header detuning_mhz,counts,dwell_s, got {headers:?}")));
        }
        let (mut d, mut c) = (Vec::new(), Vec::new());
        let mut dwell: Option<f64> = None;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
            let bad = || Error::Parse(format!("row {}: {:?}", line + 2, rec));
            d.push(field(0).parse::<f64>().map_err(|_| bad())?);
            c.push(field(1).parse::<u64>().map_err(|_| bad())?);
            let w: f64 = field(2).parse().map_err(|_| bad())?;
            match dwell {
                None => dwell = Some(w),
                Some(prev) if prev != w => {
                    return Err(Error::Parse(format!("row {}: dwell time changes within a spectrum", line + 2)))
                }
                _ => {}
            }
        }
        let dwell = dwell.ok_or_else(|| Error::Parse("spectrum file has no rows".into()))?;
        Self::new(d, c, dwell)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let r = SpectrumRecord::new(vec![-1.5, 0.0, 2.25], vec![3, 0, 17], 0.1).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("detuning_mhz,counts,dwell_s\n"));
        assert_eq!(SpectrumRecord::read_csv(buf.as_slice()).unwrap(), r);
    }

    #[test]
    fn invariants_enforced() {
        assert!(SpectrumRecord::new(vec![0.0, 0.0], vec![1, 2], 0.1).is_err());
        assert!(SpectrumRecord::new(vec![0.0], vec![1, 2], 0.1).is_err());
        assert!(SpectrumRecord::new(vec![0.0], vec![1], 0.0).is_err());
        assert!(SpectrumRecord::read_csv("detuning_mhz,counts,dwell_s\n0,-1,0.1\n".as_bytes()).is_err());
    }
}
