mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rbstark::angular::HalfInteger;
use rbstark::par::ExecMode;
use rbstark::pumping::{
    cycling_g_f, field_basis_matrix, field_sweep, larmor_evolve, rotate_amplitudes, rotate_from_field_basis,
    rotate_to_field_basis, simulate_with, MagneticField, PumpDrive, PumpSimulation, PumpState, C64,
};

fn amplitudes(max_twice_f: i32) -> impl Strategy<Value = (HalfInteger, Vec<C64>)> {
    (1..=max_twice_f).prop_flat_map(|f2| {
        let n = (f2 + 1) as usize;
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map("zero vector", move |v| {
            let c: Vec<C64> = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (norm > 1e-3).then(|| (HalfInteger::from_twice(f2), c.iter().map(|z| z / norm).collect()))
        })
    })
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn rotation_preserves_norm((f, c) in amplitudes(8), alpha in 0.0f64..=PI) {
        let rotated = rotate_amplitudes(f, alpha, &c);
        let norm: f64 = rotated.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12, "{norm}");
    }

    #[test]
    fn rotation_then_inverse_is_identity(f2 in 1i32..=8, alpha in -PI..PI) {
        let f = HalfInteger::from_twice(f2);
        let prod = field_basis_matrix(f, alpha) * field_basis_matrix(f, -alpha);
        let n = prod.nrows();
        prop_assert!((prod - DMatrix::<f64>::identity(n, n)).abs().max() < 1e-10);
    }

    #[test]
    fn density_round_trip_through_field_basis((f, c) in amplitudes(6), b in 0.0f64..10.0, alpha in 0.0f64..=PI) {
        let s = PumpState::from_amplitudes(f, 0.5, &c).unwrap();
        let field = MagneticField::new(b, alpha).unwrap();
        let back = rotate_from_field_basis(&rotate_to_field_basis(&s, &field), &field);
        prop_assert!(max_diff(back.density(), s.density()) < 1e-12);
    }

    #[test]
    fn rank_one_rotation_matches_overlap_quadrature(alpha in 0.0f64..=PI) {
        let t = field_basis_matrix(HalfInteger::ONE, alpha);
        for (b, mb) in (-1..=1).enumerate() {
            for (a, m) in (-1..=1).enumerate() {
                let q = common::rank1_overlap(alpha, mb, m);
                prop_assert!((q.re - t[(b, a)]).abs() < 1e-8 && q.im.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn precession_steps_compose((f, c) in amplitudes(6), b in 0.0f64..10.0, alpha in 0.0f64..=PI,
                                dt1 in 0.0f64..500.0, dt2 in 0.0f64..500.0) {
        let s = PumpState::from_amplitudes(f, cycling_g_f(), &c).unwrap();
        let field = MagneticField::new(b, alpha).unwrap();
        let two = larmor_evolve(&larmor_evolve(&s, &field, dt1).unwrap(), &field, dt2).unwrap();
        let one = larmor_evolve(&s, &field, dt1 + dt2).unwrap();
        prop_assert!(max_diff(two.density(), one.density()) < 1e-12);
        prop_assert!((two.time_ns() - one.time_ns()).abs() < 1e-9);
    }

    #[test]
    fn field_basis_populations_are_constant((f, c) in amplitudes(6), b in 0.0f64..10.0, alpha in 0.0f64..=PI,
                                            dt in 0.0f64..2000.0) {
        let s = PumpState::from_amplitudes(f, cycling_g_f(), &c).unwrap();
        let field = MagneticField::new(b, alpha).unwrap();
        let before = rotate_to_field_basis(&s, &field).populations();
        let after = rotate_to_field_basis(&larmor_evolve(&s, &field, dt).unwrap(), &field).populations();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn quarter_turn_matches_overlap_quadrature() {
    let t = field_basis_matrix(HalfInteger::ONE, PI / 2.0);
    for (b, mb) in (-1..=1).enumerate() {
        for (a, m) in (-1..=1).enumerate() {
            let q = common::rank1_overlap(PI / 2.0, mb, m);
            assert!((q.re - t[(b, a)]).abs() < 1e-8 && q.im.abs() < 1e-8, "({mb},{m}): {q} vs {}", t[(b, a)]);
        }
    }
}

#[test]
fn larmor_revival_period() {
    let g = cycling_g_f();
    assert!((g - 2.0 / 3.0).abs() < 1e-15);
    let field = MagneticField::perpendicular(1.0).unwrap();
    let s0 = PumpState::rb87_cycling_stretched();
    let expected = common::larmor_period_si_ns(g, 1.0);
    assert!((expected - 1071.7).abs() < 0.1, "{expected}");

    let jy = |t: f64| larmor_evolve(&s0, &field, t).unwrap().expectation_jy();
    let (mut lo, mut hi) = (0.75 * expected, 1.25 * expected);
    let (flo, fhi) = (jy(lo), jy(hi));
    assert!(flo * fhi < 0.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if jy(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let period = 0.5 * (lo + hi);
    assert!(((period - expected) / expected).abs() < 1e-6, "{period} vs {expected}");

    let back = larmor_evolve(&s0, &field, period).unwrap();
    for (x, y) in back.populations().iter().zip(s0.populations()) {
        assert!((x - y).abs() < 1e-9);
    }
    let half = larmor_evolve(&s0, &field, period / 2.0).unwrap();
    assert!(half.stretched_fraction() < 1e-9);
}

#[test]
fn drive_off_reduces_to_free_precession() {
    let field = MagneticField::new(2.0, 1.1).unwrap();
    let sim = PumpSimulation {
        drive: PumpDrive::off(),
        initial: rbstark::pumping::InitialPopulation::Stretched,
        lifetime_ns: 1e12,
        ..Default::default()
    };
    let series = simulate_with(&field, &sim).unwrap();
    let s0 = PumpState::rb87_cycling_stretched();
    for (t, frac) in series.times_ns.iter().zip(&series.fractions).step_by(37) {
        let want = larmor_evolve(&s0, &field, *t).unwrap().fractions();
        for (x, y) in frac.iter().zip(&want) {
            assert!((x - y).abs() < 1e-9, "t = {t}");
        }
    }
}

#[test]
fn zero_field_reduces_to_rate_pumping() {
    let field = MagneticField::perpendicular(0.0).unwrap();
    let sim = PumpSimulation::default();
    let series = simulate_with(&field, &sim).unwrap();
    for frac in &series.fractions {
        let s: f64 = frac.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
    assert!(series.final_stretched_fraction() >= 0.98);
}

#[test]
fn sweep_is_monotone_and_exports() {
    let bs: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    let points = field_sweep(&bs, PI / 2.0, &PumpSimulation::default(), ExecMode::Parallel).unwrap();
    for w in points.windows(2) {
        assert!(w[1].final_stretched_fraction <= w[0].final_stretched_fraction + 1e-12);
    }
    assert!(points.last().unwrap().final_stretched_fraction < 0.8);
    let mut buf = Vec::new();
    rbstark::pumping::write_sweep_csv(&points, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("B_gauss,final_stretched_fraction"));
    assert_eq!(text.lines().count(), bs.len() + 1);
    assert!(field_sweep(&[], PI / 2.0, &PumpSimulation::default(), ExecMode::Sequential).is_err());
}

#[test]
fn time_series_csv_layout() {
    let series = simulate_with(&MagneticField::perpendicular(0.3).unwrap(), &PumpSimulation::default()).unwrap();
    let mut buf = Vec::new();
    series.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "t_ns,pop_m-3,pop_m-2,pop_m-1,pop_m0,pop_m+1,pop_m+2,pop_m+3,total");
    assert_eq!(text.lines().count(), series.times_ns.len() + 1);
}
