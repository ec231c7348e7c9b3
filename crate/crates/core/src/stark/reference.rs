use serde::{Deserialize, Serialize};

use super::{PolarizabilityPair, StarkCoefficient};
use crate::angular::{FineLevel, ProbePolarization};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueWithSigma {
    pub value: f64,
    pub sigma: f64,
}

const fn vs(value: f64, sigma: f64) -> ValueWithSigma {
    ValueWithSigma { value, sigma }
}

/// Measured α_S and α_T of one level, in atomic units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelValues {
    pub alpha_s: ValueWithSigma,
    pub alpha_t: ValueWithSigma,
}

impl LevelValues {
    pub fn pair(&self) -> PolarizabilityPair {
        PolarizabilityPair::atomic(self.alpha_s.value, self.alpha_t.value)
    }
}

/// One set of calculated polarizabilities for both 5D levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheorySet {
    pub label: String,
    pub d32: PolarizabilityPair,
    pub d52: PolarizabilityPair,
}

/// A measured line sensitivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportedSensitivity {
    pub level: FineLevel,
    pub f: i32,
    pub probe: ProbePolarization,
    pub coefficient: StarkCoefficient,
}

/// Reference values used for comparison and as simulation inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    pub version: u32,
    pub ground_5p32: LevelValues,
    pub theory: Vec<TheorySet>,
    pub measured_d32: LevelValues,
    pub measured_d52: LevelValues,
    pub sensitivities: Vec<ReportedSensitivity>,
}

impl Default for ReferenceData {
    fn default() -> Self {
        Self::rb87()
    }
}

impl ReferenceData {
    pub const VERSION: u32 = 1;

    pub fn rb87() -> Self {
        let p = |level, f, probe, p, sigma_p| ReportedSensitivity {
            level,
            f,
            probe,
            coefficient: StarkCoefficient { p, sigma_p },
        };
        use FineLevel::{D32, D52};
        use ProbePolarization::{SigmaMinus, SigmaPlus};
        ReferenceData {
            version: Self::VERSION,
            ground_5p32: LevelValues { alpha_s: vs(859.0, 7.0), alpha_t: vs(-163.0, 3.0) },
            theory: vec![
                TheorySet {
                    label: "theory_1".into(),
                    d32: PolarizabilityPair::atomic(21110.0, -2871.0),
                    d52: PolarizabilityPair::atomic(20670.0, -3387.0),
                },
                TheorySet {
                    label: "theory_2".into(),
                    d32: PolarizabilityPair::atomic(16600.0, -1060.0),
                    d52: PolarizabilityPair::atomic(16200.0, -909.0),
                },
            ],
            measured_d32: LevelValues { alpha_s: vs(18400.0, 75.0), alpha_t: vs(-750.0, 30.0) },
            measured_d52: LevelValues { alpha_s: vs(18600.0, 76.0), alpha_t: vs(-1440.0, 60.0) },
            sensitivities: vec![
                p(D52, 4, SigmaPlus, 2.014, 0.008),
                p(D52, 3, SigmaPlus, 2.087, 0.008),
                p(D32, 3, SigmaPlus, 2.066, 0.008),
                p(D32, 2, SigmaMinus, 2.158, 0.009),
            ],
        }
    }

    pub fn measured(&self, level: FineLevel) -> Option<&LevelValues> {
        match level {
            FineLevel::D32 => Some(&self.measured_d32),
            FineLevel::D52 => Some(&self.measured_d52),
            FineLevel::P32 => Some(&self.ground_5p32),
            _ => None,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
