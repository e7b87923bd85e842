//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::f64::consts::{E, PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use evofam_core::demo::RdDemoSpec;
use evofam_core::evolution::{DichotomyConstants, DichotomyFamily, GreenFunction, ScalarAlphaFamily};
use evofam_core::green::{solution_signal, tail_bound, window_term_bound};
use evofam_core::heat::{gaussian_density, heat_semigroup_apply, HeatCoefficients, SpatialGrid};
use evofam_core::measure::WeightedMeasure;
use evofam_core::stepanov::{ergodic_mean, StepanovParams, WindowGrid};
use evofam_core::{
    bi_aa_family_defect, build_heat_family, contraction_factor, make_diagonal_family, near_common_period,
    picard_iterate, solve_linear, verify_mild_solution, LinearProblem, Nonlinearity, PicardOptions,
    SemilinearProblem, SeriesControl, TimeSignal,
};
use rand::Rng;

use common::{check_axioms, AxiomTolerances};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn stable_unit() -> GreenFunction {
    GreenFunction::new(Arc::new(ScalarAlphaFamily::constant_rate(1.0).unwrap()))
}

fn p1() -> StepanovParams {
    StepanovParams::new(1.0).unwrap()
}

fn sine_problem() -> Result<LinearProblem, String> {
    let probe = WindowGrid::new(0.0, 2.0 * PI, 0.01).map_err(err)?;
    LinearProblem::with_probed_norm(stable_unit(), TimeSignal::scalar(f64::sin), p1(), &probe).map_err(err)
}

fn green_closed_form() -> Outcome {
    let clock = Instant::now();
    let prob = sine_problem()?;
    let sol = solve_linear(&prob, &SeriesControl::with_tolerance(1e-10), 0.0).map_err(err)?;
    let secs = clock.elapsed().as_secs_f64();
    let e = (sol.value[0] + 0.5).abs();
    ensure(
        e <= 1e-8 && secs < 1.0,
        format!("u(0) = {:.12}, |err| = {e:.2e}, n = {}, tail <= {:.1e}, {secs:.3}s", sol.value[0], sol.n_windows, sol.tail_bound),
    )
}

fn dichotomy_split() -> Outcome {
    let fam = make_diagonal_family(vec![-1.0, 1.0]).map_err(err)?;
    let green = GreenFunction::new(fam.clone());
    let prob = LinearProblem::new(green, TimeSignal::constant(vec![1.0, 1.0]), p1(), 1.0).map_err(err)?;
    let ctrl = SeriesControl::with_tolerance(1e-10);
    let mut worst = 0.0_f64;
    let mut ode = 0.0_f64;
    let h = 0.25;
    for t in [-3.0, 0.0, 1.7, 5.0] {
        let u = solve_linear(&prob, &ctrl, t).map_err(err)?.value;
        worst = worst.max((u[0] - 1.0).abs()).max((u[1] + 1.0).abs());
        let up = solve_linear(&prob, &ctrl, t + h).map_err(err)?.value;
        let dn = solve_linear(&prob, &ctrl, t - h).map_err(err)?.value;
        for (i, rate) in [-1.0, 1.0].into_iter().enumerate() {
            let du = (up[i] - dn[i]) / (2.0 * h);
            ode = ode.max((du - rate * u[i] - 1.0).abs());
        }
    }
    let signal = solution_signal(&prob, &ctrl).map_err(err)?;
    let mut mild = 0.0_f64;
    for (t, s) in [(0.0, -1.0), (2.0, 0.5), (4.0, 3.9)] {
        mild = mild.max(verify_mild_solution(&prob, &signal, t, s, 256).map_err(err)?);
    }
    ensure(
        worst <= 1e-8 && ode <= 1e-8 && mild <= 1e-8,
        format!("max |u - (1,-1)| = {worst:.2e}, ODE residual = {ode:.2e}, mild residual = {mild:.2e}"),
    )
}

fn truncation_certificate() -> Outcome {
    let prob = sine_problem()?;
    let c = prob.constants();
    let exact = -0.5;
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=20 {
        let sol = solve_linear(&prob, &SeriesControl::fixed(n).nodes(128), 0.0).map_err(err)?;
        let measured = (sol.value[0] - exact).abs();
        let bound = tail_bound(c, prob.stepanov(), prob.g_norm(), n);
        worst = worst.max(measured - bound - 1e-9);
    }
    let unit = DichotomyConstants::new(1.0, 1.0).map_err(err)?;
    let p2 = StepanovParams::new(2.0).map_err(err)?;
    let b = window_term_bound(unit, &p2, 1.0, 3);
    let closed = 2.0 * ((E * E - 1.0) / 2.0).sqrt() * (-3.0f64).exp();
    let literal = 0.17798;
    ensure(
        worst <= 0.0 && (b - closed).abs() < 1e-12 && (b - literal).abs() < 1e-5,
        format!("max(measured - bound - 1e-9) over n=1..20 = {worst:.2e}; bound(k=3, p=2) = {b:.7} vs {literal}"),
    )
}

fn contraction_threshold() -> Outcome {
    let c = DichotomyConstants::new(1.0, 1.0).map_err(err)?;
    let r1 = contraction_factor(c, &p1(), 0.1);
    let r2 = contraction_factor(c, &StepanovParams::new(2.0).map_err(err)?, 0.1);
    let lip_branch = 2.0 / (1.0 - (-1.0f64).exp());
    let holder = r2.holder_branch.ok_or("p = 2 has no Hoelder branch")?;
    // closed form 2·√(1/(1−e^{−1/2}))
    let holder_exact = 2.0 * (1.0 / (1.0 - (-0.5f64).exp())).sqrt();
    let min1 = r1.kappa / r1.lip_norm;
    let min2 = r2.kappa / r2.lip_norm;
    let ok = (min1 - 3.16395).abs() < 1e-5
        && (r1.lipschitz_branch - lip_branch).abs() < 1e-12
        && r1.holder_branch.is_none()
        && (holder - holder_exact).abs() < 1e-12
        && min2 == holder.min(r2.lipschitz_branch)
        && (min2 - lip_branch).abs() < 1e-12
        && (r2.threshold * min2 - 1.0).abs() < 1e-15;
    ensure(
        ok,
        format!(
            "p=1 min-expression = {min1:.6}; p=2 Hoelder branch = {holder:.7} (quoted 3.18843, off by {:.1e}), min = {min2:.6}",
            (holder - 3.18843).abs()
        ),
    )
}

fn picard_convergence() -> Outcome {
    let clock = Instant::now();
    let f = Nonlinearity::new(1, TimeSignal::scalar(|_| 0.1), |t, x| vec![0.1 * x[0] + t.sin()]).map_err(err)?;
    let prob = SemilinearProblem::new(stable_unit(), f, p1(), 0.1).map_err(err)?;
    let grid = WindowGrid::new(-3.0, 3.0, 0.1).map_err(err)?;
    let ctrl = SeriesControl::with_tolerance(1e-10).nodes(64);
    let trace = picard_iterate(&prob, &ctrl, &grid, None, &PicardOptions { max_iter: 25, ..Default::default() })
        .map_err(err)?;
    let secs = clock.elapsed().as_secs_f64();
    let u0 = trace.final_iterate().eval(0.0)[0];
    let exact = -1.0 / 1.81;
    let ratio = trace.ratios().into_iter().skip(1).fold(0.0, f64::max);
    let kappa = trace.report.kappa;
    let iters = trace.sup_deltas.len();
    ensure(
        trace.converged && ratio <= kappa + 0.05 && (u0 - exact).abs() <= 1e-6 && iters <= 25 && secs < 5.0,
        format!(
            "u(0) = {u0:.9} (|err| {:.1e}), kappa = {kappa:.4}, max ratio = {ratio:.4}, {iters} sweeps, {secs:.2}s",
            (u0 - exact).abs()
        ),
    )
}

fn ergodic_decay() -> Outcome {
    let clock = Instant::now();
    let f = TimeSignal::scalar(|t: f64| t.atan() - PI / 2.0);
    let mu = WeightedMeasure::exp_left();
    let means = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&r| ergodic_mean(&f, &mu, r, 0.01))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let secs = clock.elapsed().as_secs_f64();
    ensure(
        means[0] > means[1] && means[1] > means[2] && means[2] <= 0.02 && secs < 10.0,
        format!("means at r = 10, 100, 1000: {:.5}, {:.5}, {:.6}; {secs:.2}s", means[0], means[1], means[2]),
    )
}

fn heat_semigroup() -> Outcome {
    let grid = SpatialGrid::new(20.0, 2001).map_err(err)?;
    let phi = grid.sample(|x| gaussian_density(x, 0.0, 0.5));
    let mut gauss = 0.0_f64;
    for tau in [0.01, 0.25, 1.0, 4.0] {
        let out = heat_semigroup_apply(&grid, tau, &phi).map_err(err)?.values;
        let sd = (0.25 + 2.0 * tau).sqrt();
        let expected = grid.sample(|x| gaussian_density(x, 0.0, sd));
        gauss = gauss.max(out.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let psi = grid.sample(|x| (-(x - 1.0).powi(2)).exp() * (1.0 + 0.3 * x));
    let mut law = 0.0_f64;
    for (a, b) in [(0.3, 0.7), (0.05, 0.2), (1.5, 2.5)] {
        let ab = heat_semigroup_apply(&grid, b, &heat_semigroup_apply(&grid, a, &psi).map_err(err)?.values)
            .map_err(err)?
            .values;
        let direct = heat_semigroup_apply(&grid, a + b, &psi).map_err(err)?.values;
        law = law.max(grid.norm().distance(&ab, &direct));
    }
    ensure(
        gauss <= 1e-4 && law <= 1e-6,
        format!("variance addition max error = {gauss:.2e}, semigroup law defect = {law:.2e}"),
    )
}

fn bi_aa_defect() -> Outcome {
    let grid = SpatialGrid::new(20.0, 401).map_err(err)?;
    let probe = WindowGrid::new(-400.0, 400.0, 0.01).map_err(err)?;
    let mut rng = common::rng(8);
    let samples: Vec<(f64, f64, Vec<f64>)> = (0..50)
        .map(|_| {
            let s: f64 = rng.gen_range(-10.0..10.0);
            let t = s + rng.gen_range(0.0..3.0);
            let (a, c, w) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.5..2.0));
            (t, s, grid.sample(|x| a * (-((x - c) / w).powi(2)).exp()))
        })
        .collect();
    let periodic = build_heat_family(
        grid.clone(),
        HeatCoefficients::new(
            TimeSignal::scalar(|t: f64| 2.5 + t.sin()),
            TimeSignal::scalar(|t: f64| -2.0 + 0.5 * t.cos()),
            1.0,
            1.5,
            &probe,
        )
        .map_err(err)?,
    )
    .map_err(err)?;
    let d_periodic = bi_aa_family_defect(&periodic, 2.0 * PI, &samples).map_err(err)?;
    let quasi = build_heat_family(
        grid,
        HeatCoefficients::new(
            TimeSignal::scalar(|t: f64| 2.5 + t.sin() + 0.4 * (SQRT_2 * t).sin()),
            TimeSignal::scalar(|t: f64| -2.0 + 0.5 * t.sin()),
            1.0,
            1.5,
            &probe,
        )
        .map_err(err)?,
    )
    .map_err(err)?;
    let np = near_common_period(2.0 * PI, 2.0 * PI / SQRT_2, 100.0).map_err(err)?;
    let d_quasi = bi_aa_family_defect(&quasi, np.tau, &samples).map_err(err)?;
    ensure(
        d_periodic <= 1e-8 && d_quasi < 0.05,
        format!(
            "periodic (tau = 2pi) defect = {d_periodic:.2e}; quasi-periodic (tau = {:.3}, phase error {:.1e}) defect = {d_quasi:.2e}",
            np.tau, np.phase_error
        ),
    )
}

fn reaction_diffusion_demo() -> Outcome {
    let clock = Instant::now();
    let spec = RdDemoSpec::default();
    let out = spec.run().map_err(err)?;
    let secs = clock.elapsed().as_secs_f64();
    ensure(
        out.relative_error <= 1e-2 && secs < 120.0 && spec.window[1] - spec.window[0] == 10.0,
        format!(
            "relative L2 error = {:.2e} on [{}, {}], kappa = {:.4}, {} sweeps, {secs:.1}s",
            out.relative_error,
            spec.window[0],
            spec.window[1],
            out.trace.report.kappa,
            out.trace.sup_deltas.len()
        ),
    )
}

fn invariant_suites() -> Outcome {
    let tight = AxiomTolerances {
        relative: 1e-8,
        slack: 1e-8,
    };
    let heat_tol = AxiomTolerances {
        relative: 1e-6,
        slack: 1e-8,
    };
    let heat_grid = SpatialGrid::new(30.0, 601).map_err(err)?;
    let heat: Arc<dyn DichotomyFamily> = common::heat(heat_grid.clone());
    type Case = (&'static str, Arc<dyn DichotomyFamily>, f64, Box<common::Sampler>, AxiomTolerances);
    let cases: Vec<Case> = vec![
        ("diagonal", common::diagonal(), 10.0, common::vector_sampler(3), tight),
        ("scalar_alpha", common::scalar_alpha(), 10.0, common::vector_sampler(1), tight),
        ("matrix", common::matrix(), 3.0, common::vector_sampler(3), tight),
        ("heat", heat, 2.0, common::bump_sampler(heat_grid), heat_tol),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, (name, fam, span, sampler, tol)) in cases.into_iter().enumerate() {
        let clock = Instant::now();
        let mut rng = common::rng(100 + i as u64);
        let d = check_axioms(fam, 1000, span, sampler.as_ref(), &mut rng);
        ok &= d.within(tol);
        lines.push(format!(
            "{name}: cocycle {:.1e}, commute {:.1e}, decay {:.1e}, inverse {:.1e}, envelope {:.1e} ({:.1}s)",
            d.cocycle,
            d.commutation,
            d.decay,
            d.inverse,
            d.green_envelope,
            clock.elapsed().as_secs_f64()
        ));
    }
    ensure(ok, format!("1000 trials each; {}", lines.join("; ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("green convolution closed form", green_closed_form),
        ("dichotomy split", dichotomy_split),
        ("truncation certificate", truncation_certificate),
        ("contraction threshold", contraction_threshold),
        ("picard convergence", picard_convergence),
        ("ergodic mean decay", ergodic_decay),
        ("heat semigroup", heat_semigroup),
        ("bi-AA family defect", bi_aa_defect),
        ("reaction-diffusion demo", reaction_diffusion_demo),
        ("invariant suites", invariant_suites),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
