use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::hyperfine::{manifold, transition_strength, FineLevel, HyperfineSublevel, Polarization};
use crate::{Error, Result};

/// Helicity of the probe about its own wave vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbePolarization {
    SigmaPlus,
    SigmaMinus,
}

impl ProbePolarization {
    /// Spherical component carried by the probe at zero tilt.
    pub fn q(self) -> i8 {
        match self {
            ProbePolarization::SigmaPlus => 1,
            ProbePolarization::SigmaMinus => -1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ProbePolarization::SigmaPlus => "sigma+",
            ProbePolarization::SigmaMinus => "sigma-",
        }
    }
}

/// How a circular probe tilted by θ from the quantization axis is split into
/// spherical components about that axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionModel {
    /// cos²θ stays in the original circular component, sin²θ becomes π.
    #[default]
    CircularLinearSplit,
    /// Rank-1 rotation matrix weights cos⁴(θ/2), sin²θ/2, sin⁴(θ/2).
    RotationMatrix,
}

/// Intensity weights of the components q = -1, 0, +1 (index q + 1).
pub fn polarization_weights(probe: ProbePolarization, tilt_deg: f64, model: ProjectionModel) -> [f64; 3] {
    let t = tilt_deg.to_radians();
    let (same, pi, opposite) = match model {
        ProjectionModel::CircularLinearSplit => (t.cos().powi(2), t.sin().powi(2), 0.0),
        ProjectionModel::RotationMatrix => {
            let c = (t / 2.0).cos().powi(2);
            let s = (t / 2.0).sin().powi(2);
            (c * c, 2.0 * c * s, s * s)
        }
    };
    match probe {
        ProbePolarization::SigmaPlus => [opposite, pi, same],
        ProbePolarization::SigmaMinus => [same, pi, opposite],
    }
}

/// Ground populations and probe geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcitationConfig {
    pub ground_populations: Vec<(HyperfineSublevel, f64)>,
    pub probe: ProbePolarization,
    pub tilt_deg: f64,
    #[serde(default)]
    pub projection: ProjectionModel,
}

impl ExcitationConfig {
    /// 5P3/2 pumped 0.97 into (3,3) and 0.03 into (3,2), probe tilted by 11°.
    pub fn pumped(probe: ProbePolarization) -> Self {
        let s = |m| HyperfineSublevel::rb87_int(FineLevel::P32, 3, m).expect("valid sublevel");
        ExcitationConfig {
            ground_populations: vec![(s(3), 0.97), (s(2), 0.03)],
            probe,
            tilt_deg: 11.0,
            projection: ProjectionModel::default(),
        }
    }

    /// All population in the 5P3/2 stretched state.
    pub fn stretched(probe: ProbePolarization, tilt_deg: f64) -> Self {
        let s = HyperfineSublevel::rb87_int(FineLevel::P32, 3, 3).expect("valid sublevel");
        ExcitationConfig {
            ground_populations: vec![(s, 1.0)],
            probe,
            tilt_deg,
            projection: ProjectionModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ground_populations.is_empty() {
            return Err(Error::NoInitialState);
        }
        let mut total = 0.0;
        for (s, p) in &self.ground_populations {
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::InvalidConfig(format!("population of {s} is {p}")));
            }
            total += p;
        }
        if total > 1.0 + 1e-9 {
            return Err(Error::InvalidConfig(format!("ground populations sum to {total}")));
        }
        if !(0.0..90.0).contains(&self.tilt_deg) {
            return Err(Error::InvalidConfig(format!(
                "tilt angle {} deg outside [0, 90)",
                self.tilt_deg
            )));
        }
        Ok(())
    }

    pub fn total_population(&self) -> f64 {
        self.ground_populations.iter().map(|(_, p)| p).sum()
    }
}

/// One ground → excited path with its contribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExcitationChannel {
    pub ground: HyperfineSublevel,
    pub excited: HyperfineSublevel,
    pub polarization: Polarization,
    pub strength: f64,
    pub probability: f64,
}

/// Every nonzero path from the configured ground sublevels into `level`.
pub fn excitation_channels(config: &ExcitationConfig, level: FineLevel) -> Result<Vec<ExcitationChannel>> {
    config.validate()?;
    let weights = polarization_weights(config.probe, config.tilt_deg, config.projection);
    let excited = manifold(level);
    let mut out = Vec::new();
    for &(g, pop) in &config.ground_populations {
        for pol in Polarization::ALL {
            let w = weights[(pol.q() + 1) as usize];
            for e in &excited {
                let strength = transition_strength(&g, e, pol);
                if strength > 0.0 {
                    out.push(ExcitationChannel {
                        ground: g,
                        excited: *e,
                        polarization: pol,
                        strength,
                        probability: pop * w * strength,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Excitation probability of each reachable sublevel of `level`.
///
/// The reduced matrix element is one, so a full ground population with a
/// pure σ⁺ probe puts 2/3 into the 5D5/2 stretched state.
pub fn excitation_probabilities(
    config: &ExcitationConfig,
    level: FineLevel,
) -> Result<BTreeMap<HyperfineSublevel, f64>> {
    let mut map = BTreeMap::new();
    for ch in excitation_channels(config, level)? {
        if ch.probability <= 0.0 {
            continue;
        }
        *map.entry(ch.excited).or_insert(0.0) += ch.probability;
    }
    Ok(map)
}
