//! One-dimensional reaction-diffusion application
//!
//! ```text
//! ∂u/∂t = δ(t) ∂²u/∂x² + α(t) u + a₀(t) g(u),   a₀(t) = a(t) + arctan t − π/2
//! ```
//!
//! on `L²(ℝ)` truncated to `[−L, L]` with zero extension. The linear part
//! generates `U(t,s) = e^{∫_s^t α} T(∫_s^t δ)` where `T` is the heat semigroup,
//! applied as a discrete Gaussian convolution.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{check_upper_bound, CoefficientIntegral, DichotomyConstants, DichotomyFamily, GreenFunction};
use crate::measure::WeightedMeasure;
use crate::picard::SemilinearProblem;
use crate::signal::{FunctionClass, Nonlinearity, TimeSignal};
use crate::space::Norm;
use crate::stepanov::{StepanovParams, WindowGrid};

/// Uniform grid on `[−L, L]` with trapezoid weights.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    half_width: f64,
    n_points: usize,
    spacing: f64,
    weights: Arc<[f64]>,
}

impl Default for SpatialGrid {
    fn default() -> Self {
        SpatialGrid::new(20.0, 2001).expect("default grid")
    }
}

impl SpatialGrid {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid(format!("grid half-width {half_width} must be positive")));
        }
        if n_points < 3 {
            return Err(Error::invalid("spatial grid needs at least 3 points"));
        }
        let spacing = 2.0 * half_width / (n_points - 1) as f64;
        let weights: Vec<f64> = (0..n_points)
            .map(|i| if i == 0 || i == n_points - 1 { 0.5 * spacing } else { spacing })
            .collect();
        Ok(SpatialGrid {
            half_width,
            n_points,
            spacing,
            weights: weights.into(),
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_points - 1 {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Discrete L² norm with the trapezoid weights.
    pub fn norm(&self) -> Norm {
        Norm::WeightedL2(self.weights.clone())
    }

    pub fn l2(&self, phi: &[f64]) -> f64 {
        self.norm().of(phi)
    }

    /// `∫ φ` by the trapezoid rule.
    pub fn mass(&self, phi: &[f64]) -> f64 {
        self.weights.iter().zip(phi).map(|(w, v)| w * v).sum()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.n_points).map(|i| f(self.x(i))).collect()
    }
}

/// Result of a heat-semigroup application with its boundary diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SemigroupOutput {
    pub values: Vec<f64>,
    /// `|∫φ − ∫T(τ)φ|`, mass lost through the truncated boundary.
    pub leakage: f64,
    /// Kernel width `√(2τ)` exceeds `L/2`.
    pub domain_too_small: bool,
}

/// Kernel support in standard deviations.
pub const KERNEL_CUTOFF: f64 = 8.0;

/// Below this many grid spacings per standard deviation the sampled Gaussian
/// is rescaled so that its discrete variance is exactly `2τ/h²`.
const MOMENT_MATCH_BELOW: f64 = 1.5;

/// Normalized one-sided weights `k_0, k_1, …` of the discrete Gaussian with
/// standard deviation `sd` grid spacings.
fn kernel_weights(sd: f64, max_width: usize) -> Vec<f64> {
    let width = ((KERNEL_CUTOFF * sd).ceil() as usize).clamp(1, max_width.max(1));
    let build = |s: f64| -> Vec<f64> { (0..=width).map(|j| (-0.5 * (j as f64 / s).powi(2)).exp()).collect() };
    let variance = |k: &[f64]| -> f64 {
        let total = k[0] + 2.0 * k[1..].iter().sum::<f64>();
        2.0 * k.iter().enumerate().map(|(j, w)| (j * j) as f64 * w).sum::<f64>() / total
    };
    let mut k = build(sd);
    if sd < MOMENT_MATCH_BELOW {
        let target = sd * sd;
        let (mut lo, mut hi) = (sd, sd + 2.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if variance(&build(mid)) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        k = build(0.5 * (lo + hi));
    }
    let total = k[0] + 2.0 * k[1..].iter().sum::<f64>();
    k.iter_mut().for_each(|w| *w /= total);
    k
}

fn convolve(kernel: &[f64], phi: &[f64]) -> Vec<f64> {
    let n = phi.len();
    let w = kernel.len() - 1;
    let one = |i: usize| -> f64 {
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(n - 1);
        let mut acc = 0.0;
        for (j, v) in phi.iter().enumerate().take(hi + 1).skip(lo) {
            acc += kernel[i.abs_diff(j)] * v;
        }
        acc
    };
    if n * w > 1 << 22 {
        (0..n).into_par_iter().map(one).collect()
    } else {
        (0..n).map(one).collect()
    }
}

/// `T(τ)φ`: Gaussian convolution with variance `2τ`, zero extension outside the grid.
pub fn heat_semigroup_apply(grid: &SpatialGrid, tau: f64, phi: &[f64]) -> Result<SemigroupOutput> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("semigroup time {tau} must be finite and >= 0")));
    }
    if phi.len() != grid.n_points {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points,
            got: phi.len(),
        });
    }
    if tau == 0.0 {
        return Ok(SemigroupOutput {
            values: phi.to_vec(),
            leakage: 0.0,
            domain_too_small: false,
        });
    }
    let sd = (2.0 * tau).sqrt();
    let kernel = kernel_weights(sd / grid.spacing, grid.n_points - 1);
    let values = convolve(&kernel, phi);
    let leakage = (grid.mass(phi) - grid.mass(&values)).abs();
    Ok(SemigroupOutput {
        values,
        leakage,
        domain_too_small: sd > 0.5 * grid.half_width,
    })
}

/// Time-dependent diffusion `δ(t) ≥ δ₀` and reaction `α(t) ≤ −ω`, validated on a probe grid.
#[derive(Clone)]
pub struct HeatCoefficients {
    delta_sig: TimeSignal,
    alpha_sig: TimeSignal,
    delta_floor: f64,
    omega: f64,
}

impl fmt::Debug for HeatCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HeatCoefficients")
            .field("delta_floor", &self.delta_floor)
            .field("omega", &self.omega)
            .finish_non_exhaustive()
    }
}

impl HeatCoefficients {
    pub fn new(
        delta_sig: TimeSignal,
        alpha_sig: TimeSignal,
        delta_floor: f64,
        omega: f64,
        probe: &WindowGrid,
    ) -> Result<Self> {
        for sig in [&delta_sig, &alpha_sig] {
            if sig.dim() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    got: sig.dim(),
                });
            }
        }
        if !(delta_floor > 0.0) {
            return Err(Error::invalid(format!("diffusion floor {delta_floor} must be positive")));
        }
        if !(omega > 0.0) {
            return Err(Error::invalid(format!("reaction bound omega = {omega} must be positive")));
        }
        let neg_delta = delta_sig.scale(-1.0);
        check_upper_bound(&neg_delta, -delta_floor, probe, "-delta").map_err(|e| match e {
            Error::HypothesisViolation { t, .. } => Error::HypothesisViolation {
                t,
                what: format!("diffusion {} is below the floor {delta_floor}", delta_sig.eval_scalar(t)),
            },
            other => other,
        })?;
        check_upper_bound(&alpha_sig, -omega, probe, "alpha")?;
        Ok(HeatCoefficients {
            delta_sig,
            alpha_sig,
            delta_floor,
            omega,
        })
    }

    pub fn delta(&self, t: f64) -> f64 {
        self.delta_sig.eval_scalar(t)
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.alpha_sig.eval_scalar(t)
    }

    pub fn delta_floor(&self) -> f64 {
        self.delta_floor
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// `U(t,s)φ = e^{∫_s^t α} T(∫_s^t δ) φ`; exponentially stable with `M = 1`, rate `ω`.
pub struct HeatFamily {
    grid: SpatialGrid,
    coeffs: HeatCoefficients,
    diffusion: CoefficientIntegral,
    reaction: CoefficientIntegral,
    constants: DichotomyConstants,
    norm: Norm,
}

impl fmt::Debug for HeatFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HeatFamily")
            .field("grid", &self.grid)
            .field("coeffs", &self.coeffs)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl HeatFamily {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &HeatCoefficients {
        &self.coeffs
    }

    /// `(∫_s^t δ, ∫_s^t α)`.
    pub fn exponents(&self, t: f64, s: f64) -> (f64, f64) {
        (self.diffusion.integrate(s, t), self.reaction.integrate(s, t))
    }

    /// `U(t,s)φ` with the semigroup diagnostics.
    pub fn apply_with_diagnostics(&self, t: f64, s: f64, phi: &[f64]) -> Result<SemigroupOutput> {
        if t < s {
            return Err(Error::invalid(format!("U(t,s) needs t >= s (t = {t}, s = {s})")));
        }
        let (d, a) = self.exponents(t, s);
        let mut out = heat_semigroup_apply(&self.grid, d, phi)?;
        let factor = a.exp();
        out.values.iter_mut().for_each(|v| *v *= factor);
        Ok(out)
    }
}

impl DichotomyFamily for HeatFamily {
    fn dim(&self) -> usize {
        self.grid.n_points
    }

    fn norm(&self) -> &Norm {
        &self.norm
    }

    fn constants(&self) -> DichotomyConstants {
        self.constants
    }

    fn apply(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64> {
        assert!(t >= s, "U(t,s) needs t >= s (t = {t}, s = {s})");
        self.apply_with_diagnostics(t, s, x)
            .expect("grid-sized state vector")
            .values
    }

    fn project_stable(&self, _t: f64, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn apply_inverse_unstable(&self, _t: f64, _s: f64, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn is_exponentially_stable(&self) -> bool {
        true
    }
}

pub fn build_heat_family(grid: SpatialGrid, coeffs: HeatCoefficients) -> Result<HeatFamily> {
    Ok(HeatFamily {
        norm: grid.norm(),
        constants: DichotomyConstants::new(1.0, coeffs.omega)?,
        diffusion: CoefficientIntegral::new(coeffs.delta_sig.clone()),
        reaction: CoefficientIntegral::new(coeffs.alpha_sig.clone()),
        grid,
        coeffs,
    })
}

/// `max ‖U(t+τ,s+τ)φ − U(t,s)φ‖ / (1 + ‖φ‖)` over the samples.
pub fn bi_aa_family_defect(family: &HeatFamily, tau: f64, samples: &[(f64, f64, Vec<f64>)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("bi-AA defect needs at least one sample"));
    }
    let norm = family.norm();
    samples
        .par_iter()
        .map(|(t, s, phi)| {
            let shifted = family.apply_with_diagnostics(t + tau, s + tau, phi)?.values;
            let base = family.apply_with_diagnostics(*t, *s, phi)?.values;
            Ok(norm.distance(&shifted, &base) / (1.0 + norm.of(phi)))
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

type StateMap = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// `f(t, φ) = a₀(t) g(φ)` with `a₀(t) = a(t) + arctan t − π/2` and `g` Lipschitz with constant `L_g`.
#[derive(Clone)]
pub struct Sec4Nonlinearity {
    a_sig: TimeSignal,
    lip_g: f64,
    g_map: Arc<StateMap>,
}

impl fmt::Debug for Sec4Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sec4Nonlinearity").field("lip_g", &self.lip_g).finish_non_exhaustive()
    }
}

/// `arctan t − π/2`, the ergodic drift of the amplitude.
pub fn arctan_drift(t: f64) -> f64 {
    t.atan() - FRAC_PI_2
}

impl Sec4Nonlinearity {
    pub fn new<G>(a_sig: TimeSignal, lip_g: f64, g_map: G) -> Result<Self>
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if a_sig.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: a_sig.dim(),
            });
        }
        if !(lip_g >= 0.0 && lip_g.is_finite()) {
            return Err(Error::invalid(format!("L_g = {lip_g} must be finite and >= 0")));
        }
        Ok(Sec4Nonlinearity {
            a_sig,
            lip_g,
            g_map: Arc::new(g_map),
        })
    }

    /// `g ≡ 0`.
    pub fn zero(a_sig: TimeSignal) -> Result<Self> {
        Self::new(a_sig, 0.0, |phi: &[f64]| vec![0.0; phi.len()])
    }

    /// `g(φ) = L_g tanh∘φ`.
    pub fn tanh(a_sig: TimeSignal, lip_g: f64) -> Result<Self> {
        Self::new(a_sig, lip_g, move |phi: &[f64]| phi.iter().map(|v| lip_g * v.tanh()).collect())
    }

    /// `g(φ) = L_g tanh∘φ + b` for a fixed spatial profile `b`.
    pub fn tanh_with_source(a_sig: TimeSignal, lip_g: f64, source: Vec<f64>) -> Result<Self> {
        Self::new(a_sig, lip_g, move |phi: &[f64]| {
            phi.iter().zip(&source).map(|(v, b)| lip_g * v.tanh() + b).collect()
        })
    }

    pub fn lip_g(&self) -> f64 {
        self.lip_g
    }

    pub fn a0(&self, t: f64) -> f64 {
        self.a_sig.eval_scalar(t) + arctan_drift(t)
    }

    pub fn g(&self, phi: &[f64]) -> Vec<f64> {
        (self.g_map)(phi)
    }

    /// `L_f(t) = L_g |a₀(t)|`.
    pub fn lip_modulus(&self) -> TimeSignal {
        let me = self.clone();
        TimeSignal::scalar(move |t| me.lip_g * me.a0(t).abs())
    }

    /// Largest excess of `‖g(φ) − g(ψ)‖` over `L_g‖φ − ψ‖` on the probes; `0` when none.
    pub fn lipschitz_defect(&self, probes: &[(Vec<f64>, Vec<f64>)], norm: &Norm) -> f64 {
        probes
            .iter()
            .map(|(x, y)| norm.distance(&self.g(x), &self.g(y)) - self.lip_g * norm.distance(x, y))
            .fold(0.0, f64::max)
    }

    /// `(t, φ) ↦ a₀(t) g(φ)`, tagged as Stepanov-μ-pseudo almost automorphic.
    pub fn to_nonlinearity(&self, dim: usize) -> Result<Nonlinearity> {
        let me = self.clone();
        Ok(Nonlinearity::new(dim, self.lip_modulus(), move |t, phi| {
            let a = me.a0(t);
            me.g(phi).into_iter().map(|v| a * v).collect()
        })?
        .with_class(FunctionClass::SpMuPaa))
    }
}

/// Where the `‖L_f‖_{BS¹}` used for the contraction check comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LipNormSource {
    /// A supplied upper bound.
    Analytic(f64),
    /// The probed Stepanov norm over the grid, with the probe margin.
    Probe(WindowGrid),
}

/// Assembles the abstract semilinear problem of the application (with `p = 1`).
pub fn build_sec4_problem(
    family: Arc<HeatFamily>,
    nl: &Sec4Nonlinearity,
    measure: WeightedMeasure,
    lip_norm: LipNormSource,
) -> Result<SemilinearProblem> {
    let dim = family.dim();
    let green = GreenFunction::new(family);
    let f = nl.to_nonlinearity(dim)?;
    let p1 = StepanovParams::new(1.0)?;
    let prob = match lip_norm {
        LipNormSource::Analytic(v) => SemilinearProblem::new(green, f, p1, v)?,
        LipNormSource::Probe(grid) => SemilinearProblem::with_probed_lip_norm(green, f, p1, &grid)?,
    };
    Ok(prob.with_measure(measure))
}

/// `(2π)^{−1/2} σ^{−1} e^{−(x−c)²/(2σ²)}`.
pub fn gaussian_density(x: f64, center: f64, sd: f64) -> f64 {
    (-(x - center).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}
