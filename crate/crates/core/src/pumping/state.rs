use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::rotation::field_basis_matrix;
use crate::angular::{FineLevel, HalfInteger, HyperfineSublevel};
use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Bohr magneton over Planck's constant, MHz/G.
pub const BOHR_MAGNETON_MHZ_PER_GAUSS: f64 = 1.399_624_493_61;

/// Static magnetic field: magnitude and polar angle from the z axis (in the x-z plane).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    pub b_gauss: f64,
    pub alpha_rad: f64,
}

impl MagneticField {
    pub fn new(b_gauss: f64, alpha_rad: f64) -> Result<Self> {
        if !(b_gauss.is_finite() && b_gauss >= 0.0) {
            return Err(Error::InvalidConfig(format!("field magnitude {b_gauss} G must be >= 0")));
        }
        if !(0.0..=std::f64::consts::PI).contains(&alpha_rad) {
            return Err(Error::InvalidConfig(format!("field angle {alpha_rad} rad outside [0, pi]")));
        }
        Ok(MagneticField { b_gauss, alpha_rad })
    }

    /// Field perpendicular to the pump axis.
    pub fn perpendicular(b_gauss: f64) -> Result<Self> {
        Self::new(b_gauss, std::f64::consts::FRAC_PI_2)
    }

    /// Larmor angular frequency in rad/ns for a given g_F.
    pub fn larmor_rad_per_ns(&self, g_f: f64) -> f64 {
        2.0 * std::f64::consts::PI * BOHR_MAGNETON_MHZ_PER_GAUSS * g_f * self.b_gauss * 1e-3
    }

    /// Full revival period h/(g_F μ_B B) in ns; infinite at zero field.
    pub fn larmor_period_ns(&self, g_f: f64) -> f64 {
        1e3 / (BOHR_MAGNETON_MHZ_PER_GAUSS * g_f.abs() * self.b_gauss)
    }
}

/// Sublevel state of one hyperfine manifold as a density matrix.
///
/// Rows and columns run over m = -F..F. The trace is the population still in
/// the manifold and may drop below one through the decay leak.
#[derive(Clone, Debug, PartialEq)]
pub struct PumpState {
    rho: DMatrix<C64>,
    f: HalfInteger,
    g_f: f64,
    time_ns: f64,
}

impl PumpState {
    pub fn from_density(f: HalfInteger, g_f: f64, rho: DMatrix<C64>) -> Result<Self> {
        let n = (f.twice() + 1) as usize;
        if f.twice() < 0 || rho.nrows() != n || rho.ncols() != n {
            return Err(Error::InvalidConfig(format!("density matrix must be {n}x{n} for F = {f}")));
        }
        if !g_f.is_finite() || rho.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidConfig("non-finite state".into()));
        }
        let s = PumpState { rho, f, g_f, time_ns: 0.0 };
        if s.populations().iter().any(|&p| p < -1e-12) || s.total() > 1.0 + 1e-9 {
            return Err(Error::InvalidConfig("populations must be >= 0 with total <= 1".into()));
        }
        Ok(s)
    }

    /// Incoherent mixture with the given populations (ordered m = -F..F).
    pub fn from_populations(f: HalfInteger, g_f: f64, pops: &[f64]) -> Result<Self> {
        let n = (f.twice() + 1) as usize;
        if pops.len() != n {
            return Err(Error::InvalidConfig(format!("{} populations for {n} sublevels", pops.len())));
        }
        let rho = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(pops[i], 0.0) } else { C64::new(0.0, 0.0) });
        Self::from_density(f, g_f, rho)
    }

    /// Pure state |ψ> = Σ c_m |m>.
    pub fn from_amplitudes(f: HalfInteger, g_f: f64, c: &[C64]) -> Result<Self> {
        let n = (f.twice() + 1) as usize;
        if c.len() != n {
            return Err(Error::InvalidConfig(format!("{} amplitudes for {n} sublevels", c.len())));
        }
        let rho = DMatrix::from_fn(n, n, |i, j| c[i] * c[j].conj());
        Self::from_density(f, g_f, rho)
    }

    pub fn uniform(f: HalfInteger, g_f: f64) -> Self {
        let n = (f.twice() + 1) as usize;
        Self::from_populations(f, g_f, &vec![1.0 / n as f64; n]).expect("uniform state is valid")
    }

    pub fn stretched(f: HalfInteger, g_f: f64) -> Self {
        let n = (f.twice() + 1) as usize;
        let mut p = vec![0.0; n];
        p[n - 1] = 1.0;
        Self::from_populations(f, g_f, &p).expect("stretched state is valid")
    }

    /// 5P3/2 F=3 manifold of Rb-87 with uniform populations.
    pub fn rb87_cycling_uniform() -> Self {
        Self::uniform(HalfInteger::int(3), cycling_g_f())
    }

    pub fn rb87_cycling_stretched() -> Self {
        Self::stretched(HalfInteger::int(3), cycling_g_f())
    }

    pub fn f(&self) -> HalfInteger {
        self.f
    }

    pub fn g_f(&self) -> f64 {
        self.g_f
    }

    pub fn time_ns(&self) -> f64 {
        self.time_ns
    }

    pub fn density(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub(crate) fn density_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.rho
    }

    pub(crate) fn advance(&mut self, dt_ns: f64) {
        self.time_ns += dt_ns;
    }

    /// Populations ordered m = -F..F.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re).collect()
    }

    pub fn total(&self) -> f64 {
        self.populations().iter().sum()
    }

    /// Populations normalized to the population remaining in the manifold.
    pub fn fractions(&self) -> Vec<f64> {
        let t = self.total();
        self.populations().iter().map(|p| if t > 0.0 { p / t } else { 0.0 }).collect()
    }

    pub fn stretched_fraction(&self) -> f64 {
        *self.fractions().last().expect("manifold is non-empty")
    }

    pub fn expectation_jz(&self) -> f64 {
        let f = self.f.value();
        (0..self.rho.nrows()).map(|i| (i as f64 - f) * self.rho[(i, i)].re).sum()
    }

    /// <J_y> = Im <J+>, with <J+> = Σ_m sqrt(F(F+1) - m(m+1)) ρ[m, m+1].
    pub fn expectation_jy(&self) -> f64 {
        let f = self.f.value();
        let mut jp = C64::new(0.0, 0.0);
        for i in 0..self.rho.nrows().saturating_sub(1) {
            let m = i as f64 - f;
            jp += self.rho[(i, i + 1)] * (f * (f + 1.0) - m * (m + 1.0)).sqrt();
        }
        jp.im
    }
}

/// Landé g_F of 5P3/2 F=3, from the fine-structure g_J.
pub fn cycling_g_f() -> f64 {
    HyperfineSublevel::rb87_int(FineLevel::P32, 3, 3)
        .ok()
        .and_then(|s| s.g_f())
        .expect("5P3/2 F=3 exists")
}

fn complex_basis(f: HalfInteger, alpha: f64) -> DMatrix<C64> {
    field_basis_matrix(f, alpha).map(|x| C64::new(x, 0.0))
}

/// Re-expresses the state in the basis quantized along the field direction.
pub fn rotate_to_field_basis(state: &PumpState, field: &MagneticField) -> PumpState {
    let t = complex_basis(state.f, field.alpha_rad);
    PumpState { rho: &t * &state.rho * t.adjoint(), ..state.clone() }
}

/// Inverse of [`rotate_to_field_basis`].
pub fn rotate_from_field_basis(state: &PumpState, field: &MagneticField) -> PumpState {
    let t = complex_basis(state.f, field.alpha_rad);
    PumpState { rho: t.adjoint() * &state.rho * &t, ..state.clone() }
}

/// Free precession of a field-basis state for `dt_ns`, returned in the z basis.
///
/// Each amplitude c_{m_B} picks up exp(-i ω m_B dt).
pub fn precess(state_in_field_basis: &PumpState, field: &MagneticField, dt_ns: f64) -> Result<PumpState> {
    if !(dt_ns.is_finite() && dt_ns >= 0.0) {
        return Err(Error::NonPositiveStep(dt_ns));
    }
    let phases = larmor_phases(state_in_field_basis, field, dt_ns);
    let n = phases.len();
    let rho = DMatrix::from_fn(n, n, |a, b| state_in_field_basis.rho[(a, b)] * phases[a] * phases[b].conj());
    let mut out = PumpState { rho, ..state_in_field_basis.clone() };
    out.time_ns += dt_ns;
    Ok(rotate_from_field_basis(&out, field))
}

/// Rotate into the field basis, precess, rotate back.
pub fn larmor_evolve(state: &PumpState, field: &MagneticField, dt_ns: f64) -> Result<PumpState> {
    precess(&rotate_to_field_basis(state, field), field, dt_ns)
}

fn larmor_phases(state: &PumpState, field: &MagneticField, dt_ns: f64) -> Vec<C64> {
    let omega = field.larmor_rad_per_ns(state.g_f);
    state
        .f
        .projections()
        .map(|m| C64::from_polar(1.0, -omega * m.value() * dt_ns))
        .collect()
}

/// z-basis propagator U for one free step, so that ρ → U ρ U†.
pub(crate) fn larmor_propagator(f: HalfInteger, g_f: f64, field: &MagneticField, dt_ns: f64) -> DMatrix<C64> {
    let t = complex_basis(f, field.alpha_rad);
    let omega = field.larmor_rad_per_ns(g_f);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        t.nrows(),
        f.projections().map(|m| C64::from_polar(1.0, -omega * m.value() * dt_ns)),
    ));
    t.adjoint() * d * t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn cycling_g_factor_is_two_thirds() {
        assert!((cycling_g_f() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_angle_rotation_is_identity() {
        let s = PumpState::rb87_cycling_uniform();
        let r = rotate_to_field_basis(&s, &MagneticField::new(1.0, 0.0).unwrap());
        assert!(max_diff(r.density(), s.density()) < 1e-15);
    }

    #[test]
    fn zero_field_precession_is_identity() {
        let c: Vec<C64> = (0..7).map(|k| C64::new(0.1 * k as f64, 0.05)).collect();
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let c: Vec<C64> = c.iter().map(|z| z / norm).collect();
        let s = PumpState::from_amplitudes(HalfInteger::int(3), cycling_g_f(), &c).unwrap();
        let field = MagneticField::perpendicular(0.0).unwrap();
        let out = larmor_evolve(&s, &field, 37.0).unwrap();
        assert!(max_diff(out.density(), s.density()) < 1e-12);
    }

    #[test]
    fn precession_about_x_rotates_jz_into_jy() {
        let s = PumpState::stretched(HalfInteger::ONE, 1.0);
        let field = MagneticField::perpendicular(1.0).unwrap();
        let quarter = field.larmor_period_ns(1.0) / 4.0;
        let out = larmor_evolve(&s, &field, quarter).unwrap();
        assert!(out.expectation_jz().abs() < 1e-12);
        assert!((out.expectation_jy().abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_step_rejected() {
        let s = PumpState::rb87_cycling_uniform();
        let field = MagneticField::perpendicular(1.0).unwrap();
        assert!(matches!(precess(&s, &field, -1.0), Err(Error::NonPositiveStep(_))));
    }

    #[test]
    fn field_validation() {
        assert!(MagneticField::new(-1.0, 0.0).is_err());
        assert!(MagneticField::new(1.0, 4.0).is_err());
    }
}
