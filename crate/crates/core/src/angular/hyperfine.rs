use std::fmt;

use serde::{Deserialize, Serialize};

use super::{wigner_3j, wigner_6j, HalfInteger};
use crate::{Error, Result};

/// Nuclear spin of Rb-87.
pub const RB87_NUCLEAR_SPIN: HalfInteger = HalfInteger::from_twice(3);

/// Fine-structure levels of rubidium that appear in the measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineLevel {
    /// 5S1/2
    S12,
    /// 5P3/2
    P32,
    /// 5D3/2
    D32,
    /// 5D5/2
    D52,
    /// Any other level; used for generic angular checks.
    Other,
}

impl FineLevel {
    /// Electronic angular momentum J, if the level is a named one.
    pub fn j(self) -> Option<HalfInteger> {
        match self {
            FineLevel::S12 => Some(HalfInteger::from_twice(1)),
            FineLevel::P32 | FineLevel::D32 => Some(HalfInteger::from_twice(3)),
            FineLevel::D52 => Some(HalfInteger::from_twice(5)),
            FineLevel::Other => None,
        }
    }

    /// Orbital angular momentum L, if the level is a named one.
    pub fn l(self) -> Option<u32> {
        match self {
            FineLevel::S12 => Some(0),
            FineLevel::P32 => Some(1),
            FineLevel::D32 | FineLevel::D52 => Some(2),
            FineLevel::Other => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            FineLevel::S12 => "5S1/2",
            FineLevel::P32 => "5P3/2",
            FineLevel::D32 => "5D3/2",
            FineLevel::D52 => "5D5/2",
            FineLevel::Other => "other",
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag.trim() {
            "5S1/2" | "s12" => Ok(FineLevel::S12),
            "5P3/2" | "p32" => Ok(FineLevel::P32),
            "5D3/2" | "d32" => Ok(FineLevel::D32),
            "5D5/2" | "d52" => Ok(FineLevel::D52),
            other => Err(Error::Parse(format!("unknown level tag {other:?}"))),
        }
    }

    /// Landé g_J with g_S = 2 and g_L = 1.
    pub fn g_j(self) -> Option<f64> {
        let j = self.j()?.value();
        let l = f64::from(self.l()?);
        let s = 0.5;
        Some(1.0 + (j * (j + 1.0) + s * (s + 1.0) - l * (l + 1.0)) / (2.0 * j * (j + 1.0)))
    }
}

impl fmt::Display for FineLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A hyperfine magnetic sublevel |J I F m_F>.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HyperfineSublevel {
    pub level: FineLevel,
    pub j: HalfInteger,
    pub i: HalfInteger,
    pub f: HalfInteger,
    pub m_f: HalfInteger,
}

impl HyperfineSublevel {
    pub fn new(
        level: FineLevel,
        j: HalfInteger,
        i: HalfInteger,
        f: HalfInteger,
        m_f: HalfInteger,
    ) -> Result<Self> {
        let s = HyperfineSublevel { level, j, i, f, m_f };
        s.validate()?;
        Ok(s)
    }

    /// Sublevel of a named Rb-87 level; `f` and `m_f` in twice-units.
    pub fn rb87(level: FineLevel, f: HalfInteger, m_f: HalfInteger) -> Result<Self> {
        let j = level
            .j()
            .ok_or_else(|| Error::InvalidQuantumNumbers("level has no J".into()))?;
        Self::new(level, j, RB87_NUCLEAR_SPIN, f, m_f)
    }

    /// Shorthand for integer F and m_F of a named Rb-87 level.
    pub fn rb87_int(level: FineLevel, f: i32, m_f: i32) -> Result<Self> {
        Self::rb87(level, HalfInteger::int(f), HalfInteger::int(m_f))
    }

    fn validate(&self) -> Result<()> {
        let (j, i, f, m) = (self.j.twice(), self.i.twice(), self.f.twice(), self.m_f.twice());
        let bad = |why: &str| Err(Error::InvalidQuantumNumbers(format!("{self}: {why}")));
        if j < 0 || i < 0 || f < 0 {
            return bad("negative angular momentum");
        }
        if f < (j - i).abs() || f > j + i || (j + i - f) % 2 != 0 {
            return bad("F outside |J-I|..J+I");
        }
        if m.abs() > f || (f - m) % 2 != 0 {
            return bad("m_F outside -F..F");
        }
        if let Some(level_j) = self.level.j() {
            if level_j != self.j {
                return bad("J does not match level");
            }
        }
        Ok(())
    }

    /// Hyperfine Landé factor g_F (nuclear contribution neglected).
    pub fn g_f(&self) -> Option<f64> {
        let g_j = self.level.g_j()?;
        let (f, j, i) = (self.f.value(), self.j.value(), self.i.value());
        if f == 0.0 {
            return Some(0.0);
        }
        Some(g_j * (f * (f + 1.0) + j * (j + 1.0) - i * (i + 1.0)) / (2.0 * f * (f + 1.0)))
    }
}

impl fmt::Display for HyperfineSublevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(F={}, mF={})", self.level, self.f, self.m_f)
    }
}

/// All sublevels of a named Rb-87 fine-structure level, ordered by (F, m_F).
pub fn manifold(level: FineLevel) -> Vec<HyperfineSublevel> {
    let Some(j) = level.j() else {
        return Vec::new();
    };
    let i = RB87_NUCLEAR_SPIN;
    let f_min = (j.twice() - i.twice()).abs();
    let f_max = j.twice() + i.twice();
    (f_min..=f_max)
        .step_by(2)
        .flat_map(|f2| {
            let f = HalfInteger::from_twice(f2);
            f.projections()
                .map(move |m| HyperfineSublevel { level, j, i, f, m_f: m })
        })
        .collect()
}

/// Spherical component q of the light field relative to the quantization axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Polarization(i8);

impl Polarization {
    pub const SIGMA_MINUS: Polarization = Polarization(-1);
    pub const PI: Polarization = Polarization(0);
    pub const SIGMA_PLUS: Polarization = Polarization(1);

    pub fn new(q: i8) -> Result<Self> {
        if (-1..=1).contains(&q) {
            Ok(Polarization(q))
        } else {
            Err(Error::InvalidQuantumNumbers(format!("q = {q} is not in {{-1, 0, 1}}")))
        }
    }

    pub fn q(self) -> i8 {
        self.0
    }

    pub const ALL: [Polarization; 3] = [Self::SIGMA_MINUS, Self::PI, Self::SIGMA_PLUS];
}

/// Tensor factor P multiplying α_T in the quadratic Stark shift.
///
/// Equals 1 for stretched states and vanishes identically for J < 1 and
/// F < 1, where the tensor operator has no diagonal matrix elements.
pub fn tensor_factor(s: &HyperfineSublevel) -> f64 {
    if s.j.twice() < 2 || s.f.twice() < 2 {
        return 0.0;
    }
    let (j, i, f, m) = (s.j.value(), s.i.value(), s.f.value(), s.m_f.value());
    let ff = f * (f + 1.0);
    let jj = j * (j + 1.0);
    let q = ff + jj - i * (i + 1.0);
    let num = (3.0 * m * m - ff) * (3.0 * q * (q - 1.0) - 4.0 * ff * jj);
    let den = (2.0 * f + 3.0) * (2.0 * f + 2.0) * f * (2.0 * f - 1.0) * j * (2.0 * j - 1.0);
    num / den
}

/// Relative dipole strength |<F_g m_g| e r_q |F_e m_e>|^2 with the reduced
/// fine-structure matrix element set to one.
///
/// Nonzero only when `m_e = m_g + q` and all triangle rules hold. The
/// strengths out of one ground sublevel into one excited J, summed over
/// F_e, m_e and q, add up to one.
pub fn transition_strength(g: &HyperfineSublevel, e: &HyperfineSublevel, pol: Polarization) -> f64 {
    if g.i != e.i {
        return 0.0;
    }
    let q = HalfInteger::int(i32::from(pol.q()));
    if e.m_f != g.m_f + q {
        return 0.0;
    }
    let one = HalfInteger::ONE;
    let six = wigner_6j(g.j, e.j, one, e.f, g.f, g.i);
    if six == 0.0 {
        return 0.0;
    }
    let three = wigner_3j(g.f, one, e.f, g.m_f, q, -e.m_f);
    let mult = f64::from((e.f.twice() + 1) * (g.j.twice() + 1) * (g.f.twice() + 1));
    mult * six * six * three * three
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(level: FineLevel, f: i32, m: i32) -> HyperfineSublevel {
        HyperfineSublevel::rb87_int(level, f, m).unwrap()
    }

    #[test]
    fn tensor_factor_examples() {
        assert_eq!(tensor_factor(&sub(FineLevel::D52, 4, 4)), 1.0);
        assert_eq!(tensor_factor(&sub(FineLevel::P32, 3, 3)), 1.0);
        assert_eq!(tensor_factor(&sub(FineLevel::P32, 2, 2)), 0.0);
        assert_eq!(tensor_factor(&sub(FineLevel::D52, 3, 2)), 0.0);
        assert_eq!(tensor_factor(&sub(FineLevel::D32, 2, 2)), 0.0);
        let s = HyperfineSublevel::new(
            FineLevel::Other,
            HalfInteger::from_twice(1),
            RB87_NUCLEAR_SPIN,
            HalfInteger::int(2),
            HalfInteger::int(1),
        )
        .unwrap();
        assert_eq!(tensor_factor(&s), 0.0);
    }

    #[test]
    fn tensor_factor_is_even_in_m() {
        for level in [FineLevel::P32, FineLevel::D32, FineLevel::D52] {
            for s in manifold(level) {
                let mut flipped = s;
                flipped.m_f = -s.m_f;
                assert_eq!(tensor_factor(&s), tensor_factor(&flipped), "{s}");
            }
        }
    }

    #[test]
    fn invalid_sublevels_rejected() {
        assert!(HyperfineSublevel::rb87_int(FineLevel::D52, 5, 0).is_err());
        assert!(HyperfineSublevel::rb87_int(FineLevel::D52, 3, 4).is_err());
        assert!(HyperfineSublevel::rb87(FineLevel::P32, HalfInteger::int(2), HalfInteger::from_twice(1)).is_err());
        assert!(Polarization::new(2).is_err());
    }

    #[test]
    fn g_factor_of_p32_f3() {
        let g = sub(FineLevel::P32, 3, 3).g_f().unwrap();
        assert!((g - 2.0 / 3.0).abs() < 1e-15);
        assert!((FineLevel::S12.g_j().unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn strength_selection_rules() {
        let g = sub(FineLevel::P32, 3, 3);
        // wrong projection
        assert_eq!(transition_strength(&g, &sub(FineLevel::D52, 4, 3), Polarization::SIGMA_PLUS), 0.0);
        // |ΔF| = 2
        assert_eq!(transition_strength(&g, &sub(FineLevel::D52, 1, 1), Polarization::new(-1).unwrap()), 0.0);
        let s0 = transition_strength(&g, &sub(FineLevel::D52, 4, 4), Polarization::SIGMA_PLUS);
        assert!((s0 - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn manifold_sizes() {
        assert_eq!(manifold(FineLevel::D52).len(), 3 + 5 + 7 + 9);
        assert_eq!(manifold(FineLevel::D32).len(), 1 + 3 + 5 + 7);
        assert_eq!(manifold(FineLevel::S12).len(), 3 + 5);
    }
}
