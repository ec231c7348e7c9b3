//! Quadratic Stark shifts of hyperfine sublevels.

mod reference;

use serde::{Deserialize, Serialize};

use crate::angular::{tensor_factor, HyperfineSublevel};
use crate::{Error, Result};

pub use reference::{LevelValues, ReferenceData, TheorySet, ValueWithSigma};

/// Hz·(V/cm)⁻² per atomic unit a₀³.
pub const AU_TO_HZ_PER_VCM2: f64 = 2.482e-4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizabilityUnits {
    #[default]
    AtomicUnits,
    HzPerVcmSq,
}

/// Scalar and tensor polarizability of one fine-structure level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizabilityPair {
    pub alpha_s: f64,
    pub alpha_t: f64,
    pub units: PolarizabilityUnits,
}

impl PolarizabilityPair {
    pub const fn atomic(alpha_s: f64, alpha_t: f64) -> Self {
        PolarizabilityPair { alpha_s, alpha_t, units: PolarizabilityUnits::AtomicUnits }
    }

    pub fn convert(self, to: PolarizabilityUnits) -> Self {
        PolarizabilityPair {
            alpha_s: convert_units(self.alpha_s, self.units, to),
            alpha_t: convert_units(self.alpha_t, self.units, to),
            units: to,
        }
    }

    /// Total polarizability α_S + α_T·P seen by a sublevel, in the pair's units.
    pub fn effective(&self, state: &HyperfineSublevel) -> f64 {
        self.alpha_s + self.alpha_t * tensor_factor(state)
    }
}

pub fn convert_units(value: f64, from: PolarizabilityUnits, to: PolarizabilityUnits) -> f64 {
    use PolarizabilityUnits::*;
    match (from, to) {
        (AtomicUnits, HzPerVcmSq) => value * AU_TO_HZ_PER_VCM2,
        (HzPerVcmSq, AtomicUnits) => value / AU_TO_HZ_PER_VCM2,
        _ => value,
    }
}

/// Static field along the quantization axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FieldPoint {
    e_v_per_cm: f64,
}

impl FieldPoint {
    pub fn new(e_v_per_cm: f64) -> Result<Self> {
        if !(e_v_per_cm.is_finite() && e_v_per_cm >= 0.0) {
            return Err(Error::InvalidConfig(format!("field {e_v_per_cm} V/cm must be finite and >= 0")));
        }
        Ok(FieldPoint { e_v_per_cm })
    }

    pub fn kv_per_cm(e: f64) -> Result<Self> {
        Self::new(e * 1e3)
    }

    pub fn v_per_cm(&self) -> f64 {
        self.e_v_per_cm
    }

    pub fn in_kv_per_cm(&self) -> f64 {
        self.e_v_per_cm * 1e-3
    }
}

/// Quadratic sensitivity Δf = pE² in MHz·(kV/cm)⁻².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkCoefficient {
    pub p: f64,
    pub sigma_p: f64,
}

/// Shift of one sublevel in Hz: −½(α_S + α_T·P)E².
pub fn level_shift(pol: &PolarizabilityPair, state: &HyperfineSublevel, field: FieldPoint) -> f64 {
    let a = pol.convert(PolarizabilityUnits::HzPerVcmSq).effective(state);
    -0.5 * a * field.v_per_cm().powi(2)
}

/// Shift of the resonance frequency between two sublevels, in Hz.
pub fn transition_shift(
    ground: (&PolarizabilityPair, &HyperfineSublevel),
    excited: (&PolarizabilityPair, &HyperfineSublevel),
    field: FieldPoint,
) -> f64 {
    let ag = ground.0.convert(PolarizabilityUnits::HzPerVcmSq).effective(ground.1);
    let ae = excited.0.convert(PolarizabilityUnits::HzPerVcmSq).effective(excited.1);
    -0.5 * (ae - ag) * field.v_per_cm().powi(2)
}

/// Magnitude of the quadratic coefficient of a transition, MHz·(kV/cm)⁻².
///
/// Numerically Hz·(V/cm)⁻² and MHz·(kV/cm)⁻² coincide.
pub fn predicted_p(
    ground: (&PolarizabilityPair, &HyperfineSublevel),
    excited: (&PolarizabilityPair, &HyperfineSublevel),
) -> StarkCoefficient {
    let unit = FieldPoint { e_v_per_cm: 1.0 };
    StarkCoefficient { p: transition_shift(ground, excited, unit).abs(), sigma_p: 0.0 }
}
