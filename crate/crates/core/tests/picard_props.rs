use std::sync::Arc;

use evofam_core::evolution::{GreenFunction, ScalarAlphaFamily};
use evofam_core::picard::picard_step;
use evofam_core::{
    picard_iterate, residual_check, Error, FunctionClass, Nonlinearity, PicardOptions, SemilinearProblem,
    SeriesControl, StepanovParams, TimeSignal, WeightedMeasure, WindowGrid,
};
use proptest::prelude::*;

fn stable() -> GreenFunction {
    GreenFunction::new(Arc::new(ScalarAlphaFamily::constant_rate(1.0).unwrap()))
}

/// `f(t,u) = L·u + sin t` on the unit-rate stable family.
fn problem(lip: f64) -> SemilinearProblem {
    let f = Nonlinearity::new(1, TimeSignal::scalar(move |_| lip), move |t, x| vec![lip * x[0] + t.sin()]).unwrap();
    SemilinearProblem::new(stable(), f, StepanovParams::new(1.0).unwrap(), lip).unwrap()
}

/// Bounded solution of `u' = −(1−L)u + sin t` at `t = 0`.
fn exact_at_zero(lip: f64) -> f64 {
    let a = 1.0 - lip;
    -1.0 / (1.0 + a * a)
}

fn grid() -> WindowGrid {
    WindowGrid::new(-1.0, 1.0, 0.05).unwrap()
}

fn ctrl() -> SeriesControl {
    SeriesControl::with_tolerance(1e-10).nodes(32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn deltas_shrink_geometrically(lip in 0.05..0.25f64) {
        // the constant extension left of the grid decays like e^{−(1−L)·burn_in}
        let opts = PicardOptions { burn_in: Some(20.0), ..Default::default() };
        let trace = picard_iterate(&problem(lip), &ctrl(), &grid(), None, &opts).unwrap();
        prop_assert!(trace.converged);
        let kappa = trace.report.kappa;
        for r in trace.ratios().into_iter().skip(1) {
            prop_assert!(r <= kappa + 0.05, "ratio {} vs kappa {}", r, kappa);
        }
        let u0 = trace.final_iterate().eval(0.0)[0];
        prop_assert!((u0 - exact_at_zero(lip)).abs() < 1e-6, "u0 {} exact {}", u0, exact_at_zero(lip));
    }

    #[test]
    fn a_posteriori_bound_covers_the_error(lip in 0.1..0.3f64, sweeps in 2usize..5) {
        let opts = PicardOptions { max_iter: sweeps, tol: 0.0, ..Default::default() };
        let trace = picard_iterate(&problem(lip), &ctrl(), &grid(), None, &opts).unwrap();
        let bound = trace.a_posteriori_bound().unwrap();
        let err = (trace.final_iterate().eval(0.0)[0] - exact_at_zero(lip)).abs();
        prop_assert!(err <= 2.0 * bound + 1e-6, "err {} vs bound {}", err, bound);
    }
}

#[test]
fn converged_iterate_is_a_fixed_point() {
    let prob = problem(0.2);
    let trace = picard_iterate(&prob, &ctrl(), &grid(), None, &PicardOptions::default()).unwrap();
    let last = trace.final_iterate();
    let (next, _, _) = picard_step(&prob, &ctrl(), last).unwrap();
    assert!(next.max_distance(last, &evofam_core::Norm::Sup) <= 1e-7);
}

#[test]
fn solution_satisfies_the_mild_identity() {
    let prob = problem(0.1);
    let trace = picard_iterate(&prob, &ctrl(), &grid(), None, &PicardOptions::default()).unwrap();
    let u = trace.solution();
    let pairs: Vec<(f64, f64)> = (0..10).map(|i| (-1.8 + 0.12 * i as f64, -1.3 + 0.12 * i as f64)).collect();
    let r = residual_check(&prob, &u, &pairs, 128).unwrap();
    assert!(r <= 1e-5, "{r}");
}

#[test]
fn class_tag_follows_the_hypotheses() {
    let f = Nonlinearity::new(1, TimeSignal::scalar(|_| 0.1), |t, x| vec![0.1 * x[0] + t.sin()])
        .unwrap()
        .with_class(FunctionClass::SpMuPaa);
    let base = SemilinearProblem::new(stable(), f, StepanovParams::new(1.0).unwrap(), 0.1).unwrap();
    let opts = PicardOptions::default();
    let small = WindowGrid::new(0.0, 1.0, 0.25).unwrap();
    let untagged = picard_iterate(&base, &ctrl(), &small, None, &opts).unwrap();
    assert_eq!(untagged.solution().class(), None);
    let tagged = picard_iterate(&base.with_measure(WeightedMeasure::exp_left()), &ctrl(), &small, None, &opts).unwrap();
    assert_eq!(tagged.solution().class(), Some(FunctionClass::MuPaa));
}

#[test]
fn non_contractive_problem_is_rejected() {
    match picard_iterate(&problem(0.5), &ctrl(), &grid(), None, &PicardOptions::default()) {
        Err(Error::ContractionViolation(r)) => {
            assert!(!r.admissible);
            assert!(r.kappa >= 1.0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn lipschitz_modulus_is_checked() {
    let prob = problem(0.2);
    let probes: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..20).map(|i| (i as f64, vec![i as f64], vec![-(i as f64) * 0.5])).collect();
    assert!(prob.lipschitz_defect(&probes) <= 1e-12);
    let lying = Nonlinearity::new(1, TimeSignal::scalar(|_| 0.1), |_, x| vec![0.5 * x[0]]).unwrap();
    let bad = SemilinearProblem::new(stable(), lying, StepanovParams::new(1.0).unwrap(), 0.1).unwrap();
    assert!(bad.lipschitz_defect(&probes) > 1.0);
    let negative = Nonlinearity::new(1, TimeSignal::scalar(|_| -1.0), |_, x| x.to_vec()).unwrap();
    let neg = SemilinearProblem::new(stable(), negative, StepanovParams::new(1.0).unwrap(), 0.1).unwrap();
    assert!(matches!(
        neg.check_lip_modulus(&WindowGrid::new(0.0, 1.0, 0.5).unwrap()),
        Err(Error::HypothesisViolation { .. })
    ));
}
