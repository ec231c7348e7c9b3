use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::angular::{
    excitation_channels, tensor_factor, ExcitationConfig, FineLevel, HyperfineSublevel, ProbePolarization,
};
use crate::stark::{PolarizabilityPair, PolarizabilityUnits, StarkCoefficient, AU_TO_HZ_PER_VCM2};
use crate::{Error, Result};

/// A fitted hyperfine component: excited level, its F, and the probe helicity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineSpec {
    pub level: FineLevel,
    pub f: i32,
    pub probe: ProbePolarization,
}

impl LineSpec {
    pub fn new(level: FineLevel, f: i32, probe: ProbePolarization) -> Self {
        LineSpec { level, f, probe }
    }

    /// The four lines of the measurement, with the 5D5/2 F=3 line taken
    /// under σ⁻ light where its signal is strongest.
    pub fn measured_set() -> [LineSpec; 4] {
        use FineLevel::{D32, D52};
        use ProbePolarization::{SigmaMinus, SigmaPlus};
        [
            LineSpec::new(D52, 4, SigmaPlus),
            LineSpec::new(D52, 3, SigmaMinus),
            LineSpec::new(D32, 3, SigmaPlus),
            LineSpec::new(D32, 2, SigmaMinus),
        ]
    }

    pub fn label(&self) -> String {
        format!("{}(F={}),{}", self.level, self.f, self.probe.symbol())
    }
}

/// Which sublevels make up a fitted line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineComposition {
    /// Probability-weighted mixture of every excited sublevel of the component.
    #[default]
    Mixture,
    /// Only the most probable sublevel.
    Dominant,
}

/// How the lower-state contribution enters the equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTreatment {
    /// Each excitation channel carries the tensor factor of its own ground sublevel.
    #[default]
    PerChannel,
    /// Every channel is assumed to start in 5P3/2 (F=3, mF=3).
    Stretched,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationOptions {
    pub composition: LineComposition,
    pub ground: GroundTreatment,
}

/// p = ½k(α_S + α_T⟨P⟩ − α_S(g) − α_T(g)⟨P_g⟩) for one fitted line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEquation {
    pub line: LineSpec,
    pub coefficient: StarkCoefficient,
    pub sublevel_weights: Vec<(HyperfineSublevel, f64)>,
    /// Weighted tensor factor of the excited sublevels.
    pub mean_tensor_factor: f64,
    pub ground: PolarizabilityPair,
    /// Weighted tensor factor of the ground sublevels.
    pub ground_tensor_factor: f64,
}

impl MeasurementEquation {
    /// Right-hand side in atomic units: 2p/k + α_S(g) + α_T(g)⟨P_g⟩.
    pub fn target_au(&self) -> f64 {
        let g = self.ground.convert(PolarizabilityUnits::AtomicUnits);
        2.0 * self.coefficient.p / AU_TO_HZ_PER_VCM2 + g.alpha_s + g.alpha_t * self.ground_tensor_factor
    }

    pub fn target_sigma_au(&self) -> f64 {
        2.0 * self.coefficient.sigma_p / AU_TO_HZ_PER_VCM2
    }

    /// p predicted by a given excited-level pair.
    pub fn predict(&self, excited: &PolarizabilityPair) -> f64 {
        let e = excited.convert(PolarizabilityUnits::AtomicUnits);
        let g = self.ground.convert(PolarizabilityUnits::AtomicUnits);
        0.5 * AU_TO_HZ_PER_VCM2
            * (e.alpha_s + e.alpha_t * self.mean_tensor_factor - g.alpha_s - g.alpha_t * self.ground_tensor_factor)
    }
}

/// Assembles the equation of one fitted line from the excitation model.
pub fn build_equation(
    coefficient: StarkCoefficient,
    line: LineSpec,
    config: &ExcitationConfig,
    ground: PolarizabilityPair,
    options: EquationOptions,
) -> Result<MeasurementEquation> {
    let channels: Vec<_> = excitation_channels(config, line.level)?
        .into_iter()
        .filter(|c| c.excited.f.twice() == 2 * line.f && c.probability > 0.0)
        .collect();
    let mut by_sublevel: BTreeMap<HyperfineSublevel, f64> = BTreeMap::new();
    for c in &channels {
        *by_sublevel.entry(c.excited).or_insert(0.0) += c.probability;
    }
    let total: f64 = by_sublevel.values().sum();
    if !(total > 0.0) {
        return Err(Error::LineNotExcitable);
    }
    let kept: Vec<HyperfineSublevel> = match options.composition {
        LineComposition::Mixture => by_sublevel.keys().copied().collect(),
        LineComposition::Dominant => {
            let best = by_sublevel
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(s, _)| *s)
                .expect("nonempty");
            vec![best]
        }
    };
    let kept_total: f64 = kept.iter().map(|s| by_sublevel[s]).sum();
    let sublevel_weights: Vec<_> = kept.iter().map(|s| (*s, by_sublevel[s] / kept_total)).collect();
    let mean_tensor_factor = sublevel_weights.iter().map(|(s, w)| w * tensor_factor(s)).sum();

    let ground_tensor_factor = match options.ground {
        GroundTreatment::Stretched => 1.0,
        GroundTreatment::PerChannel => {
            let (mut num, mut den) = (0.0, 0.0);
            for c in channels.iter().filter(|c| kept.contains(&c.excited)) {
                num += c.probability * tensor_factor(&c.ground);
                den += c.probability;
            }
            num / den
        }
    };
    Ok(MeasurementEquation {
        line,
        coefficient,
        sublevel_weights,
        mean_tensor_factor,
        ground,
        ground_tensor_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ground() -> PolarizabilityPair {
        PolarizabilityPair::atomic(859.0, -163.0)
    }

    #[test]
    fn stretched_line_weights() {
        let cfg = ExcitationConfig::stretched(ProbePolarization::SigmaPlus, 11.0);
        let line = LineSpec::new(FineLevel::D52, 4, ProbePolarization::SigmaPlus);
        let c = StarkCoefficient { p: 2.0, sigma_p: 0.01 };
        let eq = build_equation(c, line, &cfg, ground(), EquationOptions::default()).unwrap();
        let w: Vec<(i32, f64)> = eq.sublevel_weights.iter().map(|(s, w)| (s.m_f.twice() / 2, *w)).collect();
        assert_eq!(w.len(), 2);
        assert!((w[1].1 - 0.6424 / (0.6424 + 0.0061)).abs() < 1e-3, "{w:?}");
        let dom = EquationOptions { composition: LineComposition::Dominant, ..Default::default() };
        let eq = build_equation(c, line, &cfg, ground(), dom).unwrap();
        assert_eq!(eq.mean_tensor_factor, 1.0);
        assert_eq!(eq.ground_tensor_factor, 1.0);
    }

    #[test]
    fn unreachable_line_rejected() {
        let cfg = ExcitationConfig::stretched(ProbePolarization::SigmaPlus, 0.0);
        let line = LineSpec::new(FineLevel::D32, 1, ProbePolarization::SigmaPlus);
        let c = StarkCoefficient { p: 2.0, sigma_p: 0.01 };
        let err = build_equation(c, line, &cfg, ground(), EquationOptions::default()).unwrap_err();
        assert!(matches!(err, Error::LineNotExcitable));
    }

    #[test]
    fn predict_inverts_target() {
        let cfg = ExcitationConfig::pumped(ProbePolarization::SigmaMinus);
        let line = LineSpec::new(FineLevel::D32, 2, ProbePolarization::SigmaMinus);
        let truth = PolarizabilityPair::atomic(18400.0, -750.0);
        let mut eq = build_equation(StarkCoefficient { p: 0.0, sigma_p: 0.0 }, line, &cfg, ground(), Default::default())
            .unwrap();
        eq.coefficient.p = eq.predict(&truth);
        let lhs = truth.alpha_s + truth.alpha_t * eq.mean_tensor_factor;
        assert!((eq.target_au() - lhs).abs() < 1e-9);
    }
}
