use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::budget::UncertaintyBudget;
use super::equation::MeasurementEquation;
use crate::angular::FineLevel;
use crate::stark::{PolarizabilityPair, AU_TO_HZ_PER_VCM2};
use crate::{Error, Result};

/// Solved polarizabilities of one level with their uncertainties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: FineLevel,
    pub pair: PolarizabilityPair,
    pub sigma_s: f64,
    pub sigma_t: f64,
    /// Covariance of (α_S, α_T), a.u.².
    pub covariance: [[f64; 2]; 2],
    /// Target minus fitted value per equation, a.u.
    pub residuals: Vec<f64>,
    /// Ratio of the extreme singular values of the weighted design matrix.
    pub condition_number: f64,
    pub equations: Vec<MeasurementEquation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub levels: Vec<LevelResult>,
}

impl ExtractionResult {
    pub fn level(&self, level: FineLevel) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.level == level)
    }
}

struct Design {
    rows: Vec<[f64; 2]>,
    targets: Vec<f64>,
    weights: Vec<f64>,
    normal_inv: Matrix2<f64>,
}

fn design(equations: &[&MeasurementEquation], level: FineLevel) -> Result<Design> {
    if equations.len() < 2 {
        return Err(Error::TensorUnidentifiable(format!("{level}: fewer than two equations")));
    }
    let ps: Vec<f64> = equations.iter().map(|e| e.mean_tensor_factor).collect();
    let spread = ps.iter().copied().fold(f64::MIN, f64::max) - ps.iter().copied().fold(f64::MAX, f64::min);
    if !(spread > 1e-9) {
        return Err(Error::TensorUnidentifiable(level.to_string()));
    }
    let weighted = equations.iter().all(|e| e.coefficient.sigma_p > 0.0);
    let weights: Vec<f64> = equations
        .iter()
        .map(|e| if weighted { e.target_sigma_au().powi(-2) } else { 1.0 })
        .collect();
    let rows: Vec<[f64; 2]> = ps.iter().map(|&p| [1.0, p]).collect();
    let targets = equations.iter().map(|e| e.target_au()).collect();
    let mut n = Matrix2::zeros();
    for (r, w) in rows.iter().zip(&weights) {
        for i in 0..2 {
            for j in 0..2 {
                n[(i, j)] += w * r[i] * r[j];
            }
        }
    }
    let normal_inv = n.try_inverse().ok_or_else(|| Error::TensorUnidentifiable(level.to_string()))?;
    Ok(Design { rows, targets, weights, normal_inv })
}

impl Design {
    /// Least-squares solution for arbitrary right-hand sides.
    fn apply(&self, y: &[f64]) -> Vector2<f64> {
        let mut b = Vector2::zeros();
        for ((r, w), y) in self.rows.iter().zip(&self.weights).zip(y) {
            b[0] += w * r[0] * y;
            b[1] += w * r[1] * y;
        }
        self.normal_inv * b
    }

    fn condition_number(&self) -> f64 {
        let m = nalgebra::DMatrix::from_fn(self.rows.len(), 2, |i, j| self.weights[i].sqrt() * self.rows[i][j]);
        let sv = m.singular_values();
        sv.max() / sv.min()
    }
}

/// Weighted least-squares (α_S, α_T) for every level present in `equations`.
///
/// The covariance reflects the independent p errors only; see
/// [`propagate_to_alpha`] for the systematic part.
pub fn solve_polarizabilities(equations: &[MeasurementEquation]) -> Result<ExtractionResult> {
    let mut levels: Vec<FineLevel> = equations.iter().map(|e| e.line.level).collect();
    levels.sort();
    levels.dedup();
    let mut out = Vec::new();
    for level in levels {
        let eqs: Vec<&MeasurementEquation> = equations.iter().filter(|e| e.line.level == level).collect();
        let d = design(&eqs, level)?;
        let x = d.apply(&d.targets);
        let weighted = eqs.iter().all(|e| e.coefficient.sigma_p > 0.0);
        let cov = if weighted { d.normal_inv } else { Matrix2::zeros() };
        let residuals = d.rows.iter().zip(&d.targets).map(|(r, y)| y - r[0] * x[0] - r[1] * x[1]).collect();
        out.push(LevelResult {
            level,
            pair: PolarizabilityPair::atomic(x[0], x[1]),
            sigma_s: cov[(0, 0)].max(0.0).sqrt(),
            sigma_t: cov[(1, 1)].max(0.0).sqrt(),
            covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
            residuals,
            condition_number: d.condition_number(),
            equations: eqs.into_iter().cloned().collect(),
        });
    }
    Ok(ExtractionResult { levels: out })
}

/// Adds the systematic part of the budget to the solved covariance.
///
/// Non-statistical entries are combined in quadrature and applied as one
/// fully correlated relative error on every p. The statistical part stays the
/// independent covariance of the solve.
pub fn propagate_to_alpha(result: &ExtractionResult, budget: &UncertaintyBudget) -> Result<ExtractionResult> {
    budget.validate()?;
    let rel = budget.systematic_percent() / 100.0;
    let mut out = result.clone();
    for lr in &mut out.levels {
        let eqs: Vec<&MeasurementEquation> = lr.equations.iter().collect();
        let d = design(&eqs, lr.level)?;
        let dy: Vec<f64> = eqs.iter().map(|e| 2.0 * rel * e.coefficient.p / AU_TO_HZ_PER_VCM2).collect();
        let dx = d.apply(&dy);
        let mut cov = lr.covariance;
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += dx[i] * dx[j];
            }
        }
        lr.covariance = cov;
        lr.sigma_s = cov[0][0].max(0.0).sqrt();
        lr.sigma_t = cov[1][1].max(0.0).sqrt();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::ExcitationConfig;
    use crate::extraction::{build_equation, EquationOptions, LineSpec};
    use crate::stark::StarkCoefficient;

    fn forward(level_pairs: &[(FineLevel, PolarizabilityPair)], sigma: f64) -> Vec<MeasurementEquation> {
        let ground = PolarizabilityPair::atomic(859.0, -163.0);
        LineSpec::measured_set()
            .iter()
            .map(|line| {
                let cfg = ExcitationConfig::pumped(line.probe);
                let zero = StarkCoefficient { p: 0.0, sigma_p: sigma };
                let mut eq = build_equation(zero, *line, &cfg, ground, EquationOptions::default()).unwrap();
                let truth = level_pairs.iter().find(|(l, _)| *l == line.level).unwrap().1;
                eq.coefficient.p = eq.predict(&truth);
                eq
            })
            .collect()
    }

    #[test]
    fn exact_recovery() {
        let truth = [
            (FineLevel::D32, PolarizabilityPair::atomic(18400.0, -750.0)),
            (FineLevel::D52, PolarizabilityPair::atomic(18600.0, -1440.0)),
        ];
        let res = solve_polarizabilities(&forward(&truth, 0.0)).unwrap();
        for (level, pair) in truth {
            let got = res.level(level).unwrap();
            assert!(((got.pair.alpha_s - pair.alpha_s) / pair.alpha_s).abs() < 1e-10);
            assert!(((got.pair.alpha_t - pair.alpha_t) / pair.alpha_t).abs() < 1e-10);
            assert!(got.residuals.iter().all(|r| r.abs() < 1e-8));
        }
    }

    #[test]
    fn equal_tensor_factors_rejected() {
        let truth = [
            (FineLevel::D32, PolarizabilityPair::atomic(18400.0, -750.0)),
            (FineLevel::D52, PolarizabilityPair::atomic(18600.0, -1440.0)),
        ];
        let mut eqs = forward(&truth, 0.0);
        eqs[1].mean_tensor_factor = eqs[0].mean_tensor_factor;
        assert!(matches!(solve_polarizabilities(&eqs), Err(Error::TensorUnidentifiable(_))));
    }

    #[test]
    fn doubling_errors_doubles_sigmas() {
        let truth = [
            (FineLevel::D32, PolarizabilityPair::atomic(18400.0, -750.0)),
            (FineLevel::D52, PolarizabilityPair::atomic(18600.0, -1440.0)),
        ];
        let b = UncertaintyBudget::rb87_5d();
        let one = propagate_to_alpha(&solve_polarizabilities(&forward(&truth, 0.008)).unwrap(), &b).unwrap();
        let two = propagate_to_alpha(&solve_polarizabilities(&forward(&truth, 0.016)).unwrap(), &b.scaled(2.0))
            .unwrap();
        for (a, b) in one.levels.iter().zip(&two.levels) {
            assert!((b.sigma_s / a.sigma_s - 2.0).abs() < 1e-9);
            assert!((b.sigma_t / a.sigma_t - 2.0).abs() < 1e-9);
        }
        let zero = propagate_to_alpha(&solve_polarizabilities(&forward(&truth, 0.008)).unwrap(), &UncertaintyBudget::zero())
            .unwrap();
        let stat = solve_polarizabilities(&forward(&truth, 0.008)).unwrap();
        assert_eq!(zero.levels[0].sigma_s, stat.levels[0].sigma_s);
    }
}
