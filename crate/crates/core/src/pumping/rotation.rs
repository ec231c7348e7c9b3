use nalgebra::{Complex, DMatrix};

use crate::angular::HalfInteger;

fn factorial(n: i32) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// Wigner small-d element d^j_{m'm}(β) for rotation about y.
pub fn wigner_small_d(j: HalfInteger, m_prime: HalfInteger, m: HalfInteger, beta: f64) -> f64 {
    let (j2, mp2, m2) = (j.twice(), m_prime.twice(), m.twice());
    if mp2.abs() > j2 || m2.abs() > j2 || (j2 - mp2) % 2 != 0 || (j2 - m2) % 2 != 0 {
        return 0.0;
    }
    // All of these are integers once the projections are valid.
    let jpm = (j2 + m2) / 2;
    let jmm = (j2 - m2) / 2;
    let jpmp = (j2 + mp2) / 2;
    let jmmp = (j2 - mp2) / 2;
    let mp_minus_m = (mp2 - m2) / 2;
    let pref = (factorial(jpm) * factorial(jmm) * factorial(jpmp) * factorial(jmmp)).sqrt();
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let k_min = 0.max(-mp_minus_m);
    let k_max = jpm.min(jmmp);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let sign = if (k + mp_minus_m) % 2 == 0 { 1.0 } else { -1.0 };
        let den = factorial(jpm - k) * factorial(k) * factorial(jmmp - k) * factorial(k + mp_minus_m);
        let cos_pow = j2 - 2 * k - mp_minus_m;
        let sin_pow = 2 * k + mp_minus_m;
        sum += sign / den * c.powi(cos_pow) * s.powi(sin_pow);
    }
    pref * sum
}

/// Basis change from z-quantized amplitudes to amplitudes quantized along a
/// direction tilted by `alpha` from z in the x-z plane.
///
/// Row `b` and column `a` index `m_B = -F + b` and `m = -F + a`, so
/// `c_B = T c`. The matrix is real orthogonal and `T(-α) = T(α)ᵀ`.
pub fn field_basis_matrix(f: HalfInteger, alpha: f64) -> DMatrix<f64> {
    let ms: Vec<HalfInteger> = f.projections().collect();
    let n = ms.len();
    DMatrix::from_fn(n, n, |b, a| wigner_small_d(f, ms[a], ms[b], alpha))
}

/// Applies the basis change to an amplitude vector ordered m = -F..F.
pub fn rotate_amplitudes(f: HalfInteger, alpha: f64, c: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let t = field_basis_matrix(f, alpha);
    (0..t.nrows())
        .map(|b| (0..t.ncols()).map(|a| c[a] * t[(b, a)]).sum())
        .collect()
}
