use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest tilt accepted by [`CapacitorGeometry::validate`], arcminutes.
pub const MAX_VALIDATED_TILT_ARCMIN: f64 = 15.0;

/// How the voltage is split between the plates, relative to the grounded box.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateDrive {
    /// Bottom plate at 0, top plate at V.
    #[default]
    Grounded,
    /// Plates at -V/2 and +V/2.
    Symmetric,
}

/// Two rectangular mesh plates facing each other across a gap along z.
///
/// The meshes are modeled as solid equipotential sheets. The bottom plate
/// sits at z = -l/2 and, with the default drive, is grounded; the top plate
/// carries `voltage_v` and may be tilted about the y axis through its
/// center, which keeps the gap at the center fixed. The glass hole only matters for the dielectric,
/// which is not modeled, so `hole_diameter_mm` is carried for validation
/// and reporting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitorGeometry {
    pub plate_x_mm: f64,
    pub plate_y_mm: f64,
    pub gap_mm: f64,
    pub gap_sigma_mm: f64,
    pub hole_diameter_mm: f64,
    pub tilt_arcmin: f64,
    pub voltage_v: f64,
    #[serde(default)]
    pub drive: PlateDrive,
}

impl Default for CapacitorGeometry {
    fn default() -> Self {
        CapacitorGeometry {
            plate_x_mm: 20.0,
            plate_y_mm: 30.0,
            gap_mm: 9.88,
            gap_sigma_mm: 0.03,
            hole_diameter_mm: 10.0,
            tilt_arcmin: 0.0,
            voltage_v: 1000.0,
            drive: PlateDrive::Grounded,
        }
    }
}

impl CapacitorGeometry {
    pub fn validate(&self) -> Result<()> {
        self.validate_with_tilt_bound(MAX_VALIDATED_TILT_ARCMIN)
    }

    pub(crate) fn validate_with_tilt_bound(&self, max_tilt_arcmin: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (v, name) in [(self.plate_x_mm, "plate x extent"), (self.plate_y_mm, "plate y extent"), (self.gap_mm, "gap")] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} {v} mm must be > 0"));
            }
        }
        if !(self.gap_sigma_mm.is_finite() && self.gap_sigma_mm >= 0.0) {
            return bad(format!("gap uncertainty {} mm must be >= 0", self.gap_sigma_mm));
        }
        if !(self.hole_diameter_mm.is_finite() && self.hole_diameter_mm >= 0.0)
            || self.hole_diameter_mm >= self.plate_x_mm.min(self.plate_y_mm)
        {
            return bad(format!("hole diameter {} mm must fit inside the plate", self.hole_diameter_mm));
        }
        if !(self.tilt_arcmin.is_finite() && self.tilt_arcmin.abs() <= max_tilt_arcmin) {
            return bad(format!("tilt {}' exceeds {max_tilt_arcmin}'", self.tilt_arcmin));
        }
        if !self.voltage_v.is_finite() {
            return bad("voltage must be finite".into());
        }
        Ok(())
    }

    /// Ideal parallel-plate field V/l in V/cm.
    pub fn nominal_field_v_per_cm(&self) -> f64 {
        self.voltage_v / self.gap_mm * 10.0
    }

    /// (bottom, top) plate potentials in volts.
    pub fn plate_potentials(&self) -> (f64, f64) {
        match self.drive {
            PlateDrive::Grounded => (0.0, self.voltage_v),
            PlateDrive::Symmetric => (-self.voltage_v / 2.0, self.voltage_v / 2.0),
        }
    }

    pub fn tilt_rad(&self) -> f64 {
        (self.tilt_arcmin / 60.0).to_radians()
    }
}
