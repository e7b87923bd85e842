//! Picard iteration for `u' = A(t)u + f(t,u)` through the map
//! `(Fu)(t) = ∫ Γ(t,s) f(s, u(s)) ds`.
//!
//! `F` is a contraction on bounded continuous functions once
//!
//! ```text
//! ‖L_f‖_{BS^p} · min{ 2M(2/(qδ))^{1/q}(1/(1−e^{−δ/2}))^{1/p},  2M/(1−e^{−δ}) } < 1
//! ```
//!
//! where the first branch exists only for `p > 1`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{DichotomyConstants, GreenFunction};
use crate::green::{mild_residual, required_windows, solve_with_windows, LinearProblem, SeriesControl, PROBE_MARGIN};
use crate::interp::GridSignal;
use crate::measure::WeightedMeasure;
use crate::signal::{compose, FunctionClass, Nonlinearity, TimeSignal};
use crate::space::Norm;
use crate::stepanov::{stepanov_norm, Conjugate, StepanovParams, WindowGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub kappa: f64,
    /// Largest admissible `‖L_f‖_{BS^p}`.
    pub threshold: f64,
    pub admissible: bool,
    pub lip_norm: f64,
    pub holder_branch: Option<f64>,
    pub lipschitz_branch: f64,
}

/// Contraction factor `κ = lip_norm · min(branches)`.
pub fn contraction_factor(constants: DichotomyConstants, stepanov: &StepanovParams, lip_norm: f64) -> ContractionReport {
    let DichotomyConstants { amplitude: m, rate: d } = constants;
    let lipschitz_branch = 2.0 * m / (-(-d).exp_m1());
    let holder_branch = match stepanov.q() {
        Conjugate::Infinite => None,
        Conjugate::Finite(q) => {
            let p = stepanov.p();
            Some(2.0 * m * (2.0 / (q * d)).powf(1.0 / q) * (1.0 / -(-d / 2.0).exp_m1()).powf(1.0 / p))
        }
    };
    let min = holder_branch.map_or(lipschitz_branch, |h| h.min(lipschitz_branch));
    let kappa = lip_norm * min;
    ContractionReport {
        kappa,
        threshold: 1.0 / min,
        admissible: kappa < 1.0,
        lip_norm,
        holder_branch,
        lipschitz_branch,
    }
}

#[derive(Clone)]
pub struct SemilinearProblem {
    green: GreenFunction,
    nonlinearity: Nonlinearity,
    stepanov: StepanovParams,
    lip_norm: f64,
    measure: Option<WeightedMeasure>,
}

impl fmt::Debug for SemilinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearProblem")
            .field("green", &self.green)
            .field("nonlinearity", &self.nonlinearity)
            .field("lip_norm", &self.lip_norm)
            .finish_non_exhaustive()
    }
}

impl SemilinearProblem {
    /// `lip_norm` must be an upper bound of `‖L_f‖_{BS^p}`.
    pub fn new(green: GreenFunction, nonlinearity: Nonlinearity, stepanov: StepanovParams, lip_norm: f64) -> Result<Self> {
        if nonlinearity.dim() != green.dim() {
            return Err(Error::DimensionMismatch {
                expected: green.dim(),
                got: nonlinearity.dim(),
            });
        }
        if !(lip_norm >= 0.0 && lip_norm.is_finite()) {
            return Err(Error::invalid(format!("lip_norm = {lip_norm} must be finite and nonnegative")));
        }
        Ok(SemilinearProblem {
            green,
            nonlinearity,
            stepanov,
            lip_norm,
            measure: None,
        })
    }

    /// Probed Stepanov norm of `L_f` over `probe`, inflated by the probe margin.
    pub fn with_probed_lip_norm(
        green: GreenFunction,
        nonlinearity: Nonlinearity,
        stepanov: StepanovParams,
        probe: &WindowGrid,
    ) -> Result<Self> {
        let lip_norm = PROBE_MARGIN * stepanov_norm(nonlinearity.lip_modulus(), &stepanov, probe)?;
        Self::new(green, nonlinearity, stepanov, lip_norm)
    }

    pub fn with_measure(mut self, measure: WeightedMeasure) -> Self {
        self.measure = Some(measure);
        self
    }

    pub fn green(&self) -> &GreenFunction {
        &self.green
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn stepanov(&self) -> &StepanovParams {
        &self.stepanov
    }

    pub fn lip_norm(&self) -> f64 {
        self.lip_norm
    }

    pub fn measure(&self) -> Option<&WeightedMeasure> {
        self.measure.as_ref()
    }

    pub fn report(&self) -> ContractionReport {
        contraction_factor(self.green.constants(), &self.stepanov, self.lip_norm)
    }

    /// Rejects negative samples of `L_f` on `probe`.
    pub fn check_lip_modulus(&self, probe: &WindowGrid) -> Result<()> {
        for t in probe.points() {
            let l = self.nonlinearity.lip_modulus().eval_scalar(t);
            if !l.is_finite() {
                return Err(Error::NonFinite { t });
            }
            if l < 0.0 {
                return Err(Error::HypothesisViolation {
                    t,
                    what: format!("Lipschitz modulus {l} is negative"),
                });
            }
        }
        Ok(())
    }

    /// Largest excess of `‖f(t,x) − f(t,y)‖` over `L_f(t)‖x − y‖` on the probes; `0` when none.
    pub fn lipschitz_defect(&self, probes: &[(f64, Vec<f64>, Vec<f64>)]) -> f64 {
        let norm = self.green.norm();
        probes
            .iter()
            .map(|(t, x, y)| {
                let lhs = norm.distance(&self.nonlinearity.apply(*t, x), &self.nonlinearity.apply(*t, y));
                lhs - self.nonlinearity.lip_modulus().eval_scalar(*t) * norm.distance(x, y)
            })
            .fold(0.0, f64::max)
    }

    /// Whether a fixed point inherits the pseudo-almost-automorphic tag.
    fn solution_class(&self) -> Option<FunctionClass> {
        match (&self.measure, self.nonlinearity.class()) {
            (Some(mu), Some(FunctionClass::SpMuPaa)) if mu.satisfies_translation_hypothesis() => {
                Some(FunctionClass::MuPaa)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub max_iter: usize,
    /// Stop once the grid sup-norm change drops to this value.
    pub tol: f64,
    /// Run even when the contraction condition fails.
    pub allow_non_admissible: bool,
    /// Extra grid length before the window (and after it when the family has
    /// an unstable part); defaults to `10/δ`.
    pub burn_in: Option<f64>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            max_iter: 50,
            tol: 1e-8,
            allow_non_admissible: false,
            burn_in: None,
        }
    }
}

/// Iterates sampled on the computational grid, window plus burn-in.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub iterates: Vec<GridSignal>,
    pub sup_deltas: Vec<f64>,
    pub converged: bool,
    pub report: ContractionReport,
    /// Truncation bound of the last sweep.
    pub tail_bound: f64,
    pub n_windows: usize,
    pub window: (f64, f64),
    norm: Norm,
    class: Option<FunctionClass>,
}

impl IterationTrace {
    pub fn final_iterate(&self) -> &GridSignal {
        self.iterates.last().expect("trace holds the initial iterate")
    }

    /// The last iterate as a signal, tagged when the class hypotheses hold.
    pub fn solution(&self) -> TimeSignal {
        let s = self.final_iterate().to_signal(self.norm.clone());
        match self.class {
            Some(c) => s.with_class(c),
            None => s,
        }
    }

    /// `sup_deltas[n+1] / sup_deltas[n]`, skipping zero denominators.
    pub fn ratios(&self) -> Vec<f64> {
        self.sup_deltas
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    /// `κ/(1−κ)·‖u_N − u_{N−1}‖`; `None` when not admissible.
    pub fn a_posteriori_bound(&self) -> Option<f64> {
        let k = self.report.kappa;
        match (self.report.admissible, self.sup_deltas.last()) {
            (true, Some(d)) => Some(k / (1.0 - k) * d),
            _ => None,
        }
    }

    /// Grid times and values of the final iterate inside the user window.
    pub fn window_samples(&self) -> Vec<(f64, Vec<f64>)> {
        let (a, b) = self.window;
        let u = self.final_iterate();
        u.times()
            .into_iter()
            .zip(u.values())
            .filter(|(t, _)| *t >= a - 1e-9 && *t <= b + 1e-9)
            .map(|(t, v)| (t, v.clone()))
            .collect()
    }
}

const PROBE_STEP: f64 = 0.25;

/// One application of `F` on the grid of `current`.
///
/// The truncation index is chosen per sweep from a probed Stepanov norm of
/// the forcing `s ↦ f(s, u(s))` over the reach of the window series.
pub fn picard_step(prob: &SemilinearProblem, ctrl: &SeriesControl, current: &GridSignal) -> Result<(GridSignal, f64, usize)> {
    ctrl.validate()?;
    let u = current.to_signal(prob.green.norm().clone());
    let forcing = compose(&prob.nonlinearity, &u)?;
    let (n, g_norm) = if ctrl.tolerance > 0.0 {
        let reach = (27.7 / prob.green.constants().rate).min(100.0);
        let probe = WindowGrid::new(current.start() - reach, current.end() + reach, PROBE_STEP)?;
        let g_norm = PROBE_MARGIN * stepanov_norm(&forcing, &prob.stepanov, &probe)?;
        let n = required_windows(prob.green.constants(), &prob.stepanov, g_norm, ctrl.tolerance, ctrl.max_windows)?;
        (n, g_norm)
    } else {
        (ctrl.n_windows, 0.0)
    };
    let linear = LinearProblem::new(prob.green.clone(), forcing, prob.stepanov, g_norm)?;
    let times = current.times();
    let solved = times
        .par_iter()
        .map(|&t| solve_with_windows(&linear, n, ctrl.nodes_per_window, t))
        .collect::<Result<Vec<_>>>()?;
    let tail = solved.first().map_or(0.0, |s| s.tail_bound);
    let values = solved.into_iter().map(|s| s.value).collect();
    Ok((GridSignal::new(current.start(), current.step(), values)?, tail, n))
}

/// Banach iteration `u_{n+1} = F u_n` on the uniform grid `grid`, padded by the burn-in.
pub fn picard_iterate(
    prob: &SemilinearProblem,
    ctrl: &SeriesControl,
    grid: &WindowGrid,
    u0: Option<&TimeSignal>,
    opts: &PicardOptions,
) -> Result<IterationTrace> {
    let report = prob.report();
    if !report.admissible && !opts.allow_non_admissible {
        return Err(Error::ContractionViolation(report));
    }
    if !(opts.tol >= 0.0) {
        return Err(Error::invalid(format!("Picard tolerance {} must be >= 0", opts.tol)));
    }
    let burn_in = opts.burn_in.unwrap_or(10.0 / prob.green.constants().rate);
    if !(burn_in >= 0.0 && burn_in.is_finite()) {
        return Err(Error::invalid(format!("burn-in {burn_in} must be finite and >= 0")));
    }
    let left_pad = (burn_in / grid.step).ceil() as usize;
    let right_pad = if prob.green.family().is_exponentially_stable() {
        0
    } else {
        left_pad
    };
    let start = grid.start - left_pad as f64 * grid.step;
    let count = grid.points().len() + left_pad + right_pad;
    let dim = prob.green.dim();
    let initial = (0..count)
        .map(|i| {
            let t = start + i as f64 * grid.step;
            match u0 {
                Some(u) => u.eval_checked(t),
                None => Ok(vec![0.0; dim]),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let norm = prob.green.norm().clone();
    let mut iterates = vec![GridSignal::new(start, grid.step, initial)?];
    let mut sup_deltas = Vec::new();
    let mut converged = false;
    let mut tail_bound = 0.0;
    let mut n_windows = ctrl.n_windows;
    for sweep in 0..opts.max_iter {
        let current = iterates.last().expect("nonempty");
        let (next, tail, n) = picard_step(prob, ctrl, current)?;
        let delta = next.max_distance(current, &norm);
        tail_bound = tail;
        n_windows = n;
        iterates.push(next);
        sup_deltas.push(delta);
        if delta <= opts.tol {
            converged = true;
            break;
        }
        let m = sup_deltas.len();
        if m >= 4 && (m - 3..m).all(|i| sup_deltas[i] > sup_deltas[i - 1]) {
            return Err(Error::Divergence {
                sweep,
                deltas: sup_deltas,
            });
        }
    }
    Ok(IterationTrace {
        iterates,
        sup_deltas,
        converged,
        report,
        tail_bound,
        n_windows,
        window: (grid.start, grid.end),
        norm,
        class: prob.solution_class(),
    })
}

/// Max variation-of-constants residual over `pairs` with forcing `r ↦ f(r, u(r))`.
pub fn residual_check(prob: &SemilinearProblem, u: &TimeSignal, pairs: &[(f64, f64)], nodes: usize) -> Result<f64> {
    let g = |r: f64| -> Result<Vec<f64>> { Ok(prob.nonlinearity.apply(r, &u.eval_checked(r)?)) };
    let mut worst = 0.0f64;
    for &(s, t) in pairs {
        worst = worst.max(mild_residual(&prob.green, u, g, t, s, nodes)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::ScalarAlphaFamily;
    use std::sync::Arc;

    fn stable(rate: f64) -> GreenFunction {
        GreenFunction::new(Arc::new(ScalarAlphaFamily::constant_rate(rate).unwrap()))
    }

    fn p(v: f64) -> StepanovParams {
        StepanovParams::new(v).unwrap()
    }

    #[test]
    fn threshold_arithmetic() {
        let c = DichotomyConstants::new(1.0, 1.0).unwrap();
        let r = contraction_factor(c, &p(1.0), 0.1);
        assert!(r.holder_branch.is_none());
        assert!((r.lipschitz_branch - 3.163953413738653).abs() < 1e-12);
        assert!((r.kappa - 0.3163953413738653).abs() < 1e-12);
        assert!(r.admissible);

        let r = contraction_factor(c, &p(2.0), 0.4);
        assert!((r.holder_branch.unwrap() - 3.188412823043339).abs() < 1e-12);
        assert!((r.kappa - 1.2655813654954613).abs() < 1e-12);
        assert!(!r.admissible);

        let r = contraction_factor(c, &p(3.0), 0.0);
        assert_eq!(r.kappa, 0.0);
        assert!(r.admissible);
    }

    #[test]
    fn admissibility_matches_threshold() {
        let c = DichotomyConstants::new(1.5, 0.8).unwrap();
        for lip in [0.0, 0.05, 0.1, 0.2, 0.3, 0.5] {
            for pp in [1.0, 1.5, 2.0, 4.0] {
                let r = contraction_factor(c, &p(pp), lip);
                assert_eq!(r.admissible, lip < r.threshold);
            }
        }
    }

    #[test]
    fn constant_map_converges_to_linear_solution() {
        let g = TimeSignal::scalar(f64::sin);
        let prob = SemilinearProblem::new(stable(1.0), Nonlinearity::forcing(g), p(1.0), 0.0).unwrap();
        let grid = WindowGrid::new(-2.0, 2.0, 0.1).unwrap();
        let trace = picard_iterate(&prob, &SeriesControl::with_tolerance(1e-10), &grid, None, &PicardOptions::default()).unwrap();
        assert!(trace.converged);
        assert!(trace.sup_deltas.len() <= 2);
        let u = trace.final_iterate().eval(0.0)[0];
        assert!((u + 0.5).abs() < 1e-8);
    }

    #[test]
    fn zero_problem_stays_zero() {
        let f = Nonlinearity::new(1, TimeSignal::scalar(|_| 0.0), |_, _| vec![0.0]).unwrap();
        let prob = SemilinearProblem::new(stable(1.0), f, p(1.0), 0.0).unwrap();
        let grid = WindowGrid::new(0.0, 1.0, 0.25).unwrap();
        let trace = picard_iterate(&prob, &SeriesControl::fixed(5), &grid, None, &PicardOptions::default()).unwrap();
        assert!(trace.converged);
        assert!(trace.sup_deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn non_admissible_is_rejected_without_override() {
        let f = Nonlinearity::new(1, TimeSignal::scalar(|_| 2.0), |_, x| vec![2.0 * x[0]]).unwrap();
        let prob = SemilinearProblem::new(stable(1.0), f, p(1.0), 2.0).unwrap();
        let grid = WindowGrid::new(0.0, 1.0, 0.5).unwrap();
        match picard_iterate(&prob, &SeriesControl::fixed(3), &grid, None, &PicardOptions::default()) {
            Err(Error::ContractionViolation(r)) => assert!(r.kappa > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn divergence_is_detected_under_override() {
        let f = Nonlinearity::new(1, TimeSignal::scalar(|_| 3.0), |_, x| vec![3.0 * x[0] + 1.0]).unwrap();
        let prob = SemilinearProblem::new(stable(1.0), f, p(1.0), 3.0).unwrap();
        let grid = WindowGrid::new(0.0, 2.0, 0.5).unwrap();
        let opts = PicardOptions {
            allow_non_admissible: true,
            burn_in: Some(10.0),
            ..PicardOptions::default()
        };
        assert!(matches!(
            picard_iterate(&prob, &SeriesControl::fixed(10).nodes(16), &grid, None, &opts),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn residual_identities() {
        let f = Nonlinearity::new(1, TimeSignal::scalar(|_| 1.0), |_, x| x.to_vec()).unwrap();
        let prob = SemilinearProblem::new(stable(1.0), f, p(1.0), 1.0).unwrap();
        let r = residual_check(&prob, &TimeSignal::constant(vec![1.0]), &[(0.0, 1.0), (-2.0, 3.0)], 256).unwrap();
        assert!(r < 1e-10);
        let zero = Nonlinearity::new(1, TimeSignal::scalar(|_| 0.0), |_, _| vec![0.0]).unwrap();
        let prob = SemilinearProblem::new(stable(1.0), zero, p(1.0), 0.0).unwrap();
        assert_eq!(residual_check(&prob, &TimeSignal::zero(1), &[(0.0, 2.0)], 16).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_probe() {
        let f = Nonlinearity::new(1, TimeSignal::scalar(|_| 0.5), |t, x| vec![0.5 * x[0].tanh() + t]).unwrap();
        let prob = SemilinearProblem::new(stable(1.0), f, p(1.0), 0.5).unwrap();
        let probes: Vec<_> = (0..50)
            .map(|i| {
                let a = i as f64 * 0.37 - 9.0;
                (a, vec![a.sin() * 3.0], vec![a.cos() * 2.0])
            })
            .collect();
        assert!(prob.lipschitz_defect(&probes) <= 1e-12);
        let bad = Nonlinearity::new(1, TimeSignal::scalar(|_| -1.0), |_, x| x.to_vec()).unwrap();
        let prob = SemilinearProblem::new(stable(1.0), bad, p(1.0), 0.5).unwrap();
        assert!(prob.check_lip_modulus(&WindowGrid::new(0.0, 1.0, 0.5).unwrap()).is_err());
    }
}
