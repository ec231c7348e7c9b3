//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the crate's own Wigner or rotation code.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::Complex;

type C64 = Complex<f64>;

fn fact(n: i32) -> f64 {
    assert!(n >= 0, "factorial of {n}");
    (1..=n).map(f64::from).product()
}

fn sign(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn tri(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// Triangle coefficient Δ(abc), arguments in twice-units.
fn delta(a: i32, b: i32, c: i32) -> f64 {
    fact((a + b - c) / 2) * fact((a - b + c) / 2) * fact((-a + b + c) / 2) / fact((a + b + c) / 2 + 1)
}

/// Racah's closed form of the 3j symbol in plain f64, all arguments twice-units.
pub fn racah_3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 || !tri(j1, j2, j3) {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j + m) % 2 != 0 {
            return 0.0;
        }
    }
    // Work in integer units from here on.
    let h = |x: i32| x / 2;
    let (a, b, c) = (j1, j2, j3);
    let mut sum = 0.0;
    for t in 0..=(j1 + j2 + j3) {
        let den = [
            t,
            h(c - b + m1) + t,
            h(c - a - m2) + t,
            h(a + b - c) - t,
            h(a - m1) - t,
            h(b + m2) - t,
        ];
        if den.iter().any(|&d| d < 0) {
            continue;
        }
        sum += sign(t) / den.iter().map(|&d| fact(d)).product::<f64>();
    }
    let norm = delta(a, b, c)
        * fact(h(a + m1))
        * fact(h(a - m1))
        * fact(h(b + m2))
        * fact(h(b - m2))
        * fact(h(c + m3))
        * fact(h(c - m3));
    sign(h(a - b - m3)) * norm.sqrt() * sum
}

/// Racah's closed form of the 6j symbol in plain f64, twice-units.
pub fn racah_6j(j1: i32, j2: i32, j3: i32, j4: i32, j5: i32, j6: i32) -> f64 {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if triads.iter().any(|&(a, b, c)| !tri(a, b, c)) {
        return 0.0;
    }
    let pref: f64 = triads.iter().map(|&(a, b, c)| delta(a, b, c).sqrt()).product();
    let lows: Vec<i32> = triads.iter().map(|&(a, b, c)| (a + b + c) / 2).collect();
    let highs = [(j1 + j2 + j4 + j5) / 2, (j2 + j3 + j5 + j6) / 2, (j3 + j1 + j6 + j4) / 2];
    let t_min = *lows.iter().max().unwrap();
    let t_max = *highs.iter().min().unwrap();
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let mut den = 1.0;
        for l in &lows {
            den *= fact(t - l);
        }
        for hgh in &highs {
            den *= fact(hgh - t);
        }
        sum += sign(t) * fact(t + 1) / den;
    }
    pref * sum
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Rank-1 spherical harmonic Y_1m of a unit vector (Condon-Shortley phase).
pub fn y1(m: i32, n: [f64; 3]) -> C64 {
    let [x, y, z] = n;
    match m {
        0 => C64::new((3.0 / (4.0 * PI)).sqrt() * z, 0.0),
        1 => -(3.0 / (8.0 * PI)).sqrt() * C64::new(x, y),
        -1 => (3.0 / (8.0 * PI)).sqrt() * C64::new(x, -y),
        _ => panic!("m = {m}"),
    }
}

/// Overlap ∫ Y*_{1 m_b}(n') Y_{1 m}(n) dΩ, where n' are the coordinates of n
/// in the frame whose z axis points along (sin α, 0, cos α).
///
/// Gauss-Legendre in cos θ and a uniform φ grid; both are exact for the
/// degree-2 integrand once there are more than two nodes of each.
pub fn rank1_overlap(alpha: f64, m_b: i32, m: i32) -> C64 {
    let z_axis = [alpha.sin(), 0.0, alpha.cos()];
    let x_axis = [alpha.cos(), 0.0, -alpha.sin()];
    let y_axis = [0.0, 1.0, 0.0];
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let n_phi = 24;
    let mut acc = C64::new(0.0, 0.0);
    for (u, w) in gauss_legendre(16) {
        let s = (1.0 - u * u).sqrt();
        for k in 0..n_phi {
            let phi = 2.0 * PI * k as f64 / n_phi as f64;
            let n = [s * phi.cos(), s * phi.sin(), u];
            let np = [dot(n, x_axis), dot(n, y_axis), dot(n, z_axis)];
            acc += y1(m_b, np).conj() * y1(m, n) * w * (2.0 * PI / n_phi as f64);
        }
    }
    acc
}

/// Larmor period h / (g μ_B B) in ns from the SI constants.
pub fn larmor_period_si_ns(g: f64, b_gauss: f64) -> f64 {
    const PLANCK: f64 = 6.626_070_15e-34;
    const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
    PLANCK / (g * BOHR_MAGNETON * b_gauss * 1e-4) * 1e9
}
