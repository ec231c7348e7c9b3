use proptest::prelude::*;
use rbstark::angular::{ExcitationConfig, FineLevel};
use rbstark::extraction::{
    build_equation, monte_carlo, propagate_to_alpha, quadrature_budget, round_trip, solve_polarizabilities,
    EquationOptions, GroundTreatment, LineComposition, LineSpec, PipelineConfig, UncertaintyBudget,
};
use rbstark::par::ExecMode;
use rbstark::spectra::NoiseModel;
use rbstark::stark::{ReferenceData, StarkCoefficient};
use rbstark::Error;

fn budget(values: &[f64]) -> UncertaintyBudget {
    let names: Vec<String> = (0..values.len()).map(|i| format!("row{i}")).collect();
    UncertaintyBudget::new(names.iter().map(String::as_str).zip(values.iter().copied()).collect()).unwrap()
}

proptest! {
    #[test]
    fn budget_total_ignores_order(mut values in proptest::collection::vec(0.0f64..2.0, 1..10), seed in any::<u64>()) {
        let total = quadrature_budget(&budget(&values));
        let n = values.len();
        values.rotate_left((seed as usize) % n);
        values.reverse();
        prop_assert!((quadrature_budget(&budget(&values)) - total).abs() < 1e-12);
    }

    #[test]
    fn budget_total_grows_with_any_entry(
        values in proptest::collection::vec(0.0f64..2.0, 1..10),
        pick in any::<proptest::sample::Index>(),
        extra in 0.0f64..1.0,
    ) {
        let total = quadrature_budget(&budget(&values));
        let mut more = values.clone();
        let i = pick.index(more.len());
        more[i] += extra;
        prop_assert!(quadrature_budget(&budget(&more)) >= total);
        let largest = values.iter().copied().fold(0.0, f64::max);
        prop_assert!(total >= largest && total <= values.iter().sum::<f64>() + 1e-12);
    }
}

/// Equations built from the reported p values under their own probe labels.
fn reported_equations(options: EquationOptions) -> Vec<rbstark::extraction::MeasurementEquation> {
    let r = ReferenceData::rb87();
    r.sensitivities
        .iter()
        .map(|s| {
            let line = LineSpec::new(s.level, s.f, s.probe);
            build_equation(s.coefficient, line, &ExcitationConfig::pumped(s.probe), r.ground_5p32.pair(), options)
                .unwrap()
        })
        .collect()
}

#[test]
fn reported_sensitivities_give_scalar_values_within_two_percent() {
    let opts = EquationOptions { composition: LineComposition::Dominant, ground: GroundTreatment::Stretched };
    let result = solve_polarizabilities(&reported_equations(opts)).unwrap();
    let r = ReferenceData::rb87();
    for level in [FineLevel::D32, FineLevel::D52] {
        let got = result.level(level).unwrap().pair.alpha_s;
        let want = r.measured(level).unwrap().alpha_s.value;
        assert!(((got - want) / want).abs() < 0.02, "{level}: {got} vs {want}");
    }
}

#[test]
fn budget_widens_but_does_not_move_the_solution() {
    let result = solve_polarizabilities(&reported_equations(EquationOptions::default())).unwrap();
    let none = propagate_to_alpha(&result, &UncertaintyBudget::zero()).unwrap();
    let full = propagate_to_alpha(&result, &UncertaintyBudget::rb87_5d()).unwrap();
    for ((a, b), c) in result.levels.iter().zip(&none.levels).zip(&full.levels) {
        assert_eq!(a.pair, b.pair);
        assert_eq!(a.pair, c.pair);
        assert!((a.sigma_s - b.sigma_s).abs() < 1e-9 * a.sigma_s);
        assert!(c.sigma_s > a.sigma_s && c.sigma_t >= a.sigma_t);
    }
}

#[test]
fn identical_tensor_factors_are_unidentifiable() {
    let r = ReferenceData::rb87();
    let line = LineSpec::measured_set()[0];
    let cfg = ExcitationConfig::pumped(line.probe);
    let eqs: Vec<_> = [2.01, 2.02]
        .iter()
        .map(|&p| {
            let c = StarkCoefficient { p, sigma_p: 0.01 };
            build_equation(c, line, &cfg, r.ground_5p32.pair(), EquationOptions::default()).unwrap()
        })
        .collect();
    assert!(matches!(solve_polarizabilities(&eqs), Err(Error::TensorUnidentifiable(_))));
}

#[test]
fn single_field_has_no_lever_arm() {
    let mut cfg = PipelineConfig::rb87();
    cfg.fields_kv_per_cm = vec![0.0];
    assert!(matches!(round_trip(&cfg, 1), Err(Error::NoFieldLeverArm)));
}

#[test]
fn monte_carlo_is_order_stable_and_mode_independent() {
    let mut cfg = PipelineConfig::rb87();
    cfg.transition.noise = NoiseModel::Poisson;
    let seeds = [3, 1, 2];
    let seq = monte_carlo(&cfg, &seeds, ExecMode::Sequential);
    let par = monte_carlo(&cfg, &seeds, ExecMode::Parallel);
    for ((a, b), s) in seq.iter().zip(&par).zip(seeds) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        assert_eq!(a.result, b.result);
        assert_eq!(a.result, round_trip(&cfg, s).unwrap().result);
    }
}
