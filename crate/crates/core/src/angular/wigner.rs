//! Wigner 3-j and 6-j symbols.
//!
//! Racah's single-sum formulas are evaluated in exact integer arithmetic.
//! The alternating sum and the square of the prefactor are kept as rationals,
//! and a single square root is taken when converting to `f64`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::HalfInteger;

const FACTORIAL_TABLE_LEN: usize = 256;

fn factorial(n: i32) -> &'static BigInt {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(FACTORIAL_TABLE_LEN);
        t.push(BigInt::one());
        for k in 1..FACTORIAL_TABLE_LEN {
            let next = &t[k - 1] * BigInt::from(k);
            t.push(next);
        }
        t
    });
    &table[usize::try_from(n).expect("negative factorial argument")]
}

/// `(a+b-c)/2` etc. in twice-units; `None` unless the triad closes with
/// integer perimeter.
fn triangle(a: i32, b: i32, c: i32) -> bool {
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Triangle coefficient squared: `(a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!`,
/// arguments in twice-units.
fn delta_sq(a: i32, b: i32, c: i32) -> BigRational {
    let num = factorial((a + b - c) / 2) * factorial((a - b + c) / 2) * factorial((-a + b + c) / 2);
    let den = factorial((a + b + c) / 2 + 1).clone();
    BigRational::new(num, den)
}

fn signed_sqrt(sum: &BigRational, pref_sq: &BigRational, negate: bool) -> f64 {
    if sum.is_zero() {
        return 0.0;
    }
    let mag_sq = (sum * sum * pref_sq).to_f64().unwrap_or(f64::NAN);
    let positive = sum.is_positive() != negate;
    if positive {
        mag_sq.sqrt()
    } else {
        -mag_sq.sqrt()
    }
}

/// Wigner 3-j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns exactly zero when the triangle rule, the projection sum rule or
/// `|m| <= j` fails, or when `j - m` is not integral.
pub fn wigner_3j(
    j1: HalfInteger,
    j2: HalfInteger,
    j3: HalfInteger,
    m1: HalfInteger,
    m2: HalfInteger,
    m3: HalfInteger,
) -> f64 {
    let (j1, j2, j3) = (j1.twice(), j2.twice(), j3.twice());
    let (m1, m2, m3) = (m1.twice(), m2.twice(), m3.twice());

    if !triangle(j1, j2, j3) || m1 + m2 + m3 != 0 {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j - m) % 2 != 0 {
            return 0.0;
        }
    }

    // Racah: sum over k of (-1)^k / [k! (j3-j2+k+m1)! (j3-j1+k-m2)!
    //   (j1+j2-j3-k)! (j1-k-m1)! (j2-k+m2)!]
    let a1 = (j3 - j2 + m1) / 2;
    let a2 = (j3 - j1 - m2) / 2;
    let b1 = (j1 + j2 - j3) / 2;
    let b2 = (j1 - m1) / 2;
    let b3 = (j2 + m2) / 2;
    let k_min = 0.max(-a1).max(-a2);
    let k_max = b1.min(b2).min(b3);

    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(a1 + k)
            * factorial(a2 + k)
            * factorial(b1 - k)
            * factorial(b2 - k)
            * factorial(b3 - k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }

    let mut pref = delta_sq(j1, j2, j3);
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        pref *= BigRational::from_integer(factorial((j + m) / 2) * factorial((j - m) / 2));
    }

    let phase = (j1 - j2 - m3) / 2;
    signed_sqrt(&sum, &pref, phase.rem_euclid(2) == 1)
}

/// Wigner 6-j symbol `{j1 j2 j3; j4 j5 j6}`.
///
/// Returns exactly zero when any of the four triads `(j1 j2 j3)`,
/// `(j1 j5 j6)`, `(j4 j2 j6)`, `(j4 j5 j3)` violates the triangle rule.
pub fn wigner_6j(
    j1: HalfInteger,
    j2: HalfInteger,
    j3: HalfInteger,
    j4: HalfInteger,
    j5: HalfInteger,
    j6: HalfInteger,
) -> f64 {
    let (j1, j2, j3) = (j1.twice(), j2.twice(), j3.twice());
    let (j4, j5, j6) = (j4.twice(), j5.twice(), j6.twice());
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if triads.iter().any(|&(a, b, c)| !triangle(a, b, c)) {
        return 0.0;
    }

    let alphas = triads.map(|(a, b, c)| (a + b + c) / 2);
    let betas = [
        (j1 + j2 + j4 + j5) / 2,
        (j2 + j3 + j5 + j6) / 2,
        (j3 + j1 + j6 + j4) / 2,
    ];
    let t_min = *alphas.iter().max().unwrap();
    let t_max = *betas.iter().min().unwrap();

    let mut sum = BigRational::zero();
    for t in t_min..=t_max {
        let mut den = BigInt::one();
        for a in alphas {
            den *= factorial(t - a);
        }
        for b in betas {
            den *= factorial(b - t);
        }
        let term = BigRational::new(factorial(t + 1).clone(), den);
        if t % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }

    let pref = triads
        .iter()
        .fold(BigRational::one(), |acc, &(a, b, c)| acc * delta_sq(a, b, c));
    signed_sqrt(&sum, &pref, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i32) -> HalfInteger {
        HalfInteger::from_twice(twice)
    }

    fn int(n: i32) -> HalfInteger {
        HalfInteger::int(n)
    }

    #[test]
    fn three_j_reference_values() {
        let v = wigner_3j(int(1), int(1), int(1), int(1), int(-1), int(0));
        assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(wigner_3j(int(1), int(2), int(4), int(0), int(0), int(0)), 0.0);
        let v = wigner_3j(int(1), int(1), int(0), int(0), int(0), int(0));
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn three_j_selection_rules() {
        assert_eq!(wigner_3j(int(1), int(1), int(1), int(1), int(1), int(0)), 0.0);
        assert_eq!(wigner_3j(int(1), int(1), int(1), int(2), int(-2), int(0)), 0.0);
        // j - m must be integral
        assert_eq!(wigner_3j(int(1), int(1), int(1), h(1), h(-1), int(0)), 0.0);
    }

    #[test]
    fn six_j_reference_values() {
        let v = wigner_6j(int(1), int(1), int(1), int(1), int(1), int(1));
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        let v = wigner_6j(int(1), int(1), int(1), int(0), int(1), int(1));
        assert!((v + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(wigner_6j(int(1), int(2), int(4), int(1), int(1), int(1)), 0.0);
    }

    #[test]
    fn half_integer_symbols() {
        // (1/2 1/2 1; 1/2 1/2 -1) = -1/sqrt(3)
        let v = wigner_3j(h(1), h(1), int(1), h(1), h(1), int(-1));
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        // {1/2 1/2 1; 1/2 1/2 0} = 1/2 (sign (-1)^(1/2+1/2+1) = +)
        let v = wigner_6j(h(1), h(1), int(1), h(1), h(1), int(0));
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn large_arguments_stay_finite() {
        let v = wigner_3j(int(20), int(20), int(20), int(3), int(-7), int(4));
        assert!(v.is_finite() && v.abs() < 1.0);
        let v = wigner_6j(int(20), int(20), int(20), int(20), int(20), int(20));
        assert!(v.is_finite() && v.abs() < 1.0);
    }
}
