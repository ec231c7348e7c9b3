use proptest::prelude::*;
use rbstark::angular::{manifold, FineLevel, HyperfineSublevel};
use rbstark::stark::{
    convert_units, level_shift, predicted_p, transition_shift, FieldPoint, PolarizabilityPair, PolarizabilityUnits,
    ReferenceData,
};

fn any_sublevel(level: FineLevel) -> impl Strategy<Value = HyperfineSublevel> {
    let subs = manifold(level);
    (0..subs.len()).prop_map(move |i| subs[i])
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

proptest! {
    #[test]
    fn level_shift_is_quadratic_in_field(
        s in any_sublevel(FineLevel::D52),
        e in 0.0f64..5000.0,
        scale in 0.0f64..4.0,
        alpha_s in -3e4f64..3e4,
        alpha_t in -3e3f64..3e3,
    ) {
        let pol = PolarizabilityPair::atomic(alpha_s, alpha_t);
        let base = level_shift(&pol, &s, FieldPoint::new(e).unwrap());
        let scaled = level_shift(&pol, &s, FieldPoint::new(scale * e).unwrap());
        prop_assert!((scaled - scale * scale * base).abs() <= 1e-12 * base.abs().max(1e-300) * (1.0 + scale * scale));
    }

    #[test]
    fn unit_conversion_round_trips(v in -1e6f64..1e6) {
        use PolarizabilityUnits::*;
        let there = convert_units(v, AtomicUnits, HzPerVcmSq);
        let back = convert_units(there, HzPerVcmSq, AtomicUnits);
        prop_assert!(rel(back, v) < 1e-15 || (back - v).abs() < 1e-300);
    }

    #[test]
    fn shift_does_not_depend_on_units(s in any_sublevel(FineLevel::D32), e in 0.0f64..3000.0) {
        let au = PolarizabilityPair::atomic(18400.0, -750.0);
        let hz = au.convert(PolarizabilityUnits::HzPerVcmSq);
        let f = FieldPoint::new(e).unwrap();
        prop_assert!(rel(level_shift(&hz, &s, f), level_shift(&au, &s, f)) < 1e-12);
    }

    #[test]
    fn transition_shift_is_difference_of_level_shifts(
        g in any_sublevel(FineLevel::P32),
        x in any_sublevel(FineLevel::D52),
        e in 0.0f64..3000.0,
    ) {
        let r = ReferenceData::rb87();
        let (pg, pe) = (r.ground_5p32.pair(), r.measured_d52.pair());
        let f = FieldPoint::new(e).unwrap();
        let direct = transition_shift((&pg, &g), (&pe, &x), f);
        let levels = level_shift(&pe, &x, f) - level_shift(&pg, &g, f);
        prop_assert!((direct - levels).abs() <= 1e-9 * direct.abs().max(1.0));
    }
}

#[test]
fn predicted_p_gives_shift_at_any_field() {
    let r = ReferenceData::rb87();
    let g = HyperfineSublevel::rb87_int(FineLevel::P32, 3, 3).unwrap();
    let x = HyperfineSublevel::rb87_int(FineLevel::D52, 4, 4).unwrap();
    let (pg, pe) = (r.ground_5p32.pair(), r.measured_d52.pair());
    let p = predicted_p((&pg, &g), (&pe, &x)).p;
    for e_kv in [0.5, 1.0, 2.5] {
        let shift_mhz = transition_shift((&pg, &g), (&pe, &x), FieldPoint::kv_per_cm(e_kv).unwrap()) * 1e-6;
        assert!((shift_mhz.abs() - p * e_kv * e_kv).abs() < 1e-12, "{e_kv}");
    }
    // Hand arithmetic: ½·k·(18600 − 1440 − 859 + 163).
    assert!((p - 0.5 * 2.482e-4 * (18600.0 - 1440.0 - 859.0 + 163.0)).abs() < 1e-12);
}

#[test]
fn reference_data_round_trips_through_toml() {
    let r = ReferenceData::rb87();
    let back = ReferenceData::from_toml(&r.to_toml().unwrap()).unwrap();
    assert_eq!(back, r);
    assert!(ReferenceData::from_toml("version = \"x\"").is_err());
}
