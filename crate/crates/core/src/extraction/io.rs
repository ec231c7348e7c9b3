use std::io::Write;

use serde::{Deserialize, Serialize};

use super::equation::{LineSpec, MeasurementEquation};
use super::solve::ExtractionResult;
use crate::angular::{FineLevel, HyperfineSublevel, ProbePolarization};
use crate::stark::{PolarizabilityPair, StarkCoefficient};
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightRecord {
    f: i32,
    m_f: i32,
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquationRecord {
    level: String,
    f: i32,
    probe: ProbePolarization,
    p_mhz_per_kv_cm_sq: f64,
    sigma_p_mhz_per_kv_cm_sq: f64,
    mean_tensor_factor: f64,
    ground_alpha_s_au: f64,
    ground_alpha_t_au: f64,
    ground_tensor_factor: f64,
    weights: Vec<WeightRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquationFile {
    equation: Vec<EquationRecord>,
}

/// Structured-text form of a set of equations, one table per equation.
pub fn equations_to_toml(equations: &[MeasurementEquation]) -> Result<String> {
    let file = EquationFile {
        equation: equations
            .iter()
            .map(|e| {
                let g = e.ground.convert(crate::stark::PolarizabilityUnits::AtomicUnits);
                EquationRecord {
                    level: e.line.level.tag().to_string(),
                    f: e.line.f,
                    probe: e.line.probe,
                    p_mhz_per_kv_cm_sq: e.coefficient.p,
                    sigma_p_mhz_per_kv_cm_sq: e.coefficient.sigma_p,
                    mean_tensor_factor: e.mean_tensor_factor,
                    ground_alpha_s_au: g.alpha_s,
                    ground_alpha_t_au: g.alpha_t,
                    ground_tensor_factor: e.ground_tensor_factor,
                    weights: e
                        .sublevel_weights
                        .iter()
                        .map(|(s, w)| WeightRecord { f: s.f.twice() / 2, m_f: s.m_f.twice() / 2, weight: *w })
                        .collect(),
                }
            })
            .collect(),
    };
    toml::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
}

pub fn equations_from_toml(text: &str) -> Result<Vec<MeasurementEquation>> {
    let file: EquationFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.equation
        .into_iter()
        .map(|r| {
            let level = FineLevel::parse(&r.level)?;
            let sublevel_weights = r
                .weights
                .iter()
                .map(|w| {
                    if !(w.weight >= 0.0) {
                        return Err(Error::Parse(format!("negative weight {}", w.weight)));
                    }
                    Ok((HyperfineSublevel::rb87_int(level, w.f, w.m_f)?, w.weight))
                })
                .collect::<Result<Vec<_>>>()?;
            if r.sigma_p_mhz_per_kv_cm_sq < 0.0 {
                return Err(Error::Parse("sigma_p must be >= 0".into()));
            }
            Ok(MeasurementEquation {
                line: LineSpec::new(level, r.f, r.probe),
                coefficient: StarkCoefficient { p: r.p_mhz_per_kv_cm_sq, sigma_p: r.sigma_p_mhz_per_kv_cm_sq },
                sublevel_weights,
                mean_tensor_factor: r.mean_tensor_factor,
                ground: PolarizabilityPair::atomic(r.ground_alpha_s_au, r.ground_alpha_t_au),
                ground_tensor_factor: r.ground_tensor_factor,
            })
        })
        .collect()
}

/// Table of α values with one-σ uncertainties, columns `polarizability,value_au,sigma_au`.
pub fn write_alpha_table<W: Write>(result: &ExtractionResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["polarizability", "value_au", "sigma_au"])?;
    for lr in &result.levels {
        let pair = lr.pair.convert(crate::stark::PolarizabilityUnits::AtomicUnits);
        w.write_record([format!("alpha_S({})", lr.level), format!("{:.1}", pair.alpha_s), format!("{:.1}", lr.sigma_s)])?;
        w.write_record([format!("alpha_T({})", lr.level), format!("{:.1}", pair.alpha_t), format!("{:.1}", lr.sigma_t)])?;
    }
    w.flush()?;
    Ok(())
}

/// Table of line sensitivities, columns `line,p_mhz_per_kv_cm_sq,sigma_p_mhz_per_kv_cm_sq`.
pub fn write_p_table<W: Write>(equations: &[MeasurementEquation], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["line", "p_mhz_per_kv_cm_sq", "sigma_p_mhz_per_kv_cm_sq"])?;
    for e in equations {
        w.write_record([e.line.label(), format!("{:.4}", e.coefficient.p), format!("{:.4}", e.coefficient.sigma_p)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::ExcitationConfig;
    use crate::extraction::{build_equation, solve_polarizabilities, EquationOptions};

    fn equations() -> Vec<MeasurementEquation> {
        let ground = PolarizabilityPair::atomic(859.0, -163.0);
        LineSpec::measured_set()
            .iter()
            .zip([2.014, 2.087, 2.066, 2.158])
            .map(|(line, p)| {
                let cfg = ExcitationConfig::pumped(line.probe);
                let c = StarkCoefficient { p, sigma_p: 0.008 };
                build_equation(c, *line, &cfg, ground, EquationOptions::default()).unwrap()
            })
            .collect()
    }

    #[test]
    fn toml_round_trip() {
        let eqs = equations();
        let text = equations_to_toml(&eqs).unwrap();
        let back = equations_from_toml(&text).unwrap();
        assert_eq!(back.len(), 4);
        for (a, b) in eqs.iter().zip(&back) {
            assert_eq!(a.line, b.line);
            assert_eq!(a.coefficient, b.coefficient);
            assert_eq!(a.sublevel_weights, b.sublevel_weights);
            assert_eq!(a.mean_tensor_factor, b.mean_tensor_factor);
        }
        assert!(equations_from_toml("[[equation]]\nbogus = 1\n").is_err());
    }

    #[test]
    fn tables_have_headers() {
        let eqs = equations();
        let res = solve_polarizabilities(&eqs).unwrap();
        let mut buf = Vec::new();
        write_alpha_table(&res, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("polarizability,value_au,sigma_au\n"));
        assert_eq!(text.lines().count(), 5);
        let mut buf = Vec::new();
        write_p_table(&eqs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
