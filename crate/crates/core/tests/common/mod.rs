#![allow(dead_code, unused_imports)]

use std::f64::consts::SQRT_2;
use std::sync::Arc;

pub use evofam_core::axioms::{AxiomDefects, AxiomTolerances};
use evofam_core::axioms::{self, AxiomSample};
use evofam_core::evolution::{DichotomyFamily, MatrixFamily};
use evofam_core::heat::{build_heat_family, HeatCoefficients, HeatFamily, SpatialGrid};
use evofam_core::stepanov::WindowGrid;
use evofam_core::{make_diagonal_family, make_scalar_timevarying_family, TimeSignal};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub type Sampler = dyn Fn(&mut ChaCha8Rng) -> Vec<f64>;

/// Runs `trials` random checks of the dichotomy axioms with `|t − s| ≤ span`.
pub fn check_axioms(
    fam: Arc<dyn DichotomyFamily>,
    trials: usize,
    span: f64,
    sampler: &Sampler,
    rng: &mut ChaCha8Rng,
) -> AxiomDefects {
    let samples: Vec<AxiomSample> = (0..trials)
        .map(|_| {
            let s: f64 = rng.gen_range(-10.0..10.0);
            let r = s + rng.gen_range(0.0..span / 2.0);
            let t = r + rng.gen_range(0.0..span / 2.0);
            AxiomSample { s, r, t, x: sampler(rng) }
        })
        .collect();
    axioms::check_axioms(&fam, &samples)
}

pub fn vector_sampler(dim: usize) -> Box<Sampler> {
    Box::new(move |rng: &mut ChaCha8Rng| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect())
}

/// Smooth bumps of random height, centre and width, well inside the grid.
pub fn bump_sampler(grid: SpatialGrid) -> Box<Sampler> {
    Box::new(move |rng: &mut ChaCha8Rng| {
        let (a, c, w) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(1.5..3.0));
        grid.sample(|x| a * (-((x - c) / w).powi(2)).exp())
    })
}

pub fn diagonal() -> Arc<dyn DichotomyFamily> {
    make_diagonal_family(vec![-2.0, -0.5, 1.5]).unwrap()
}

pub fn scalar_alpha() -> Arc<dyn DichotomyFamily> {
    let probe = WindowGrid::new(-100.0, 100.0, 0.01).unwrap();
    make_scalar_timevarying_family(TimeSignal::scalar(|t: f64| -2.0 + t.sin()), 1.0, &probe).unwrap()
}

pub fn matrix() -> Arc<dyn DichotomyFamily> {
    Arc::new(MatrixFamily::coupled_saddle())
}

/// Quasi-periodic diffusion `2.5 + sin t + 0.4 sin √2 t` and reaction `−2 + 0.5 sin t`.
pub fn quasi_periodic_coefficients() -> HeatCoefficients {
    let probe = WindowGrid::new(-100.0, 100.0, 0.01).unwrap();
    HeatCoefficients::new(
        TimeSignal::scalar(|t: f64| 2.5 + t.sin() + 0.4 * (SQRT_2 * t).sin()),
        TimeSignal::scalar(|t: f64| -2.0 + 0.5 * t.sin()),
        1.0,
        1.5,
        &probe,
    )
    .unwrap()
}

pub fn heat(grid: SpatialGrid) -> Arc<HeatFamily> {
    Arc::new(build_heat_family(grid, quasi_periodic_coefficients()).unwrap())
}
