//! Bounded mild solution `u(t) = ∫_ℝ Γ(t,s)g(s)ds` of `u' = A(t)u + g` by the
//! unit-window series `u = Σ_{k≥1} u_k` with a certified truncation bound.
//!
//! The window term is
//!
//! ```text
//! u_k(t) = ∫_{t−k}^{t−k+1} Γ(t,s)g(s)ds + ∫_{t+k−1}^{t+k} Γ(t,s)g(s)ds
//! ```
//!
//! and each term is bounded by the dichotomy envelope and the Stepanov norm of
//! `g`:
//!
//! ```text
//! p > 1:  ‖u_k(t)‖ ≤ 2M‖g‖ C_q e^{−δk},   C_q = ((e^{δq} − 1)/(δq))^{1/q}
//! p = 1:  ‖u_k(t)‖ ≤ 2M‖g‖ e^{−δ(k−1)}
//! ```

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{DichotomyConstants, GreenFunction};
use crate::quad;
use crate::signal::TimeSignal;
use crate::space::axpy;
use crate::stepanov::{stepanov_norm, StepanovParams, WindowGrid};

/// Safety factor applied to probed Stepanov norms.
pub const PROBE_MARGIN: f64 = 1.1;

#[derive(Clone)]
pub struct LinearProblem {
    green: GreenFunction,
    forcing: TimeSignal,
    stepanov: StepanovParams,
    g_norm: f64,
}

impl fmt::Debug for LinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearProblem")
            .field("green", &self.green)
            .field("stepanov", &self.stepanov)
            .field("g_norm", &self.g_norm)
            .finish_non_exhaustive()
    }
}

impl LinearProblem {
    /// `g_norm` must be an upper bound of `‖g‖_{BS^p}`.
    pub fn new(green: GreenFunction, forcing: TimeSignal, stepanov: StepanovParams, g_norm: f64) -> Result<Self> {
        if forcing.dim() != green.dim() {
            return Err(Error::DimensionMismatch {
                expected: green.dim(),
                got: forcing.dim(),
            });
        }
        if !(g_norm >= 0.0 && g_norm.is_finite()) {
            return Err(Error::invalid(format!("g_norm = {g_norm} must be finite and nonnegative")));
        }
        Ok(LinearProblem {
            green,
            forcing,
            stepanov,
            g_norm,
        })
    }

    /// Probed Stepanov norm of the forcing over `probe`, inflated by [`PROBE_MARGIN`].
    pub fn with_probed_norm(
        green: GreenFunction,
        forcing: TimeSignal,
        stepanov: StepanovParams,
        probe: &WindowGrid,
    ) -> Result<Self> {
        let g_norm = PROBE_MARGIN * stepanov_norm(&forcing, &stepanov, probe)?;
        Self::new(green, forcing, stepanov, g_norm)
    }

    pub fn green(&self) -> &GreenFunction {
        &self.green
    }

    pub fn forcing(&self) -> &TimeSignal {
        &self.forcing
    }

    pub fn stepanov(&self) -> &StepanovParams {
        &self.stepanov
    }

    pub fn g_norm(&self) -> f64 {
        self.g_norm
    }

    pub fn constants(&self) -> DichotomyConstants {
        self.green.constants()
    }
}

pub const DEFAULT_MAX_WINDOWS: usize = 2000;

/// Truncation and quadrature controls for the window series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesControl {
    pub n_windows: usize,
    pub nodes_per_window: usize,
    /// Target for the tail bound; `0` keeps `n_windows` fixed.
    pub tolerance: f64,
    /// Hard cap on the automatically selected `n`.
    pub max_windows: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            n_windows: 20,
            nodes_per_window: crate::stepanov::DEFAULT_WINDOW_NODES,
            tolerance: 0.0,
            max_windows: DEFAULT_MAX_WINDOWS,
        }
    }
}

impl SeriesControl {
    pub fn fixed(n_windows: usize) -> Self {
        SeriesControl {
            n_windows,
            ..Self::default()
        }
    }

    pub fn with_tolerance(tolerance: f64) -> Self {
        SeriesControl {
            tolerance,
            ..Self::default()
        }
    }

    pub fn nodes(mut self, nodes_per_window: usize) -> Self {
        self.nodes_per_window = nodes_per_window;
        self
    }

    pub fn cap(mut self, max_windows: usize) -> Self {
        self.max_windows = max_windows;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_windows == 0 {
            return Err(Error::invalid("n_windows must be >= 1"));
        }
        if self.nodes_per_window == 0 {
            return Err(Error::invalid("nodes_per_window must be >= 1"));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid(format!("tolerance {} must be finite and >= 0", self.tolerance)));
        }
        if self.max_windows == 0 {
            return Err(Error::invalid("max_windows must be >= 1"));
        }
        Ok(())
    }
}

/// `u_k(t)` by composite Simpson with `nodes` sub-intervals per window.
///
/// The right window is evaluated on the unstable branch up to and including
/// its endpoint `s = t`, so the quadrature sees the one-sided limit there.
pub fn window_term(prob: &LinearProblem, k: usize, t: f64, nodes: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("window index k must be >= 1"));
    }
    let family = prob.green.family();
    let mut acc = vec![0.0; prob.green.dim()];
    let k = k as f64;
    for (s, w) in quad::simpson_rule(t - k, t - k + 1.0, nodes) {
        let s = s.min(t);
        let g = prob.forcing.eval_checked(s)?;
        axpy(&mut acc, w, &family.apply(t, s, &family.project_stable(s, &g)));
    }
    if !family.is_exponentially_stable() {
        for (s, w) in quad::simpson_rule(t + k - 1.0, t + k, nodes) {
            let s = s.max(t);
            let g = prob.forcing.eval_checked(s)?;
            let q = family.project_unstable(s, &g);
            axpy(&mut acc, -w, &family.apply_inverse_unstable(t, s, &q));
        }
    }
    Ok(acc)
}

/// Upper bound of `‖u_k(t)‖`.
pub fn window_term_bound(constants: DichotomyConstants, stepanov: &StepanovParams, g_norm: f64, k: usize) -> f64 {
    let DichotomyConstants { amplitude: m, rate: d } = constants;
    let k = k as f64;
    match stepanov.hoelder_factor(d) {
        Some(c) => 2.0 * m * g_norm * c * (-d * k).exp(),
        None => 2.0 * m * g_norm * (-d * (k - 1.0)).exp(),
    }
}

/// `Σ_{k>n}` of [`window_term_bound`] in closed form.
pub fn tail_bound(constants: DichotomyConstants, stepanov: &StepanovParams, g_norm: f64, n: usize) -> f64 {
    let d = constants.rate;
    window_term_bound(constants, stepanov, g_norm, n + 1) / (-(-d).exp_m1())
}

/// Smallest `n` with `tail_bound(n) ≤ tolerance`, or a truncation failure past `cap`.
pub fn required_windows(
    constants: DichotomyConstants,
    stepanov: &StepanovParams,
    g_norm: f64,
    tolerance: f64,
    cap: usize,
) -> Result<usize> {
    let lead = tail_bound(constants, stepanov, g_norm, 0);
    if lead <= tolerance {
        return Ok(1);
    }
    // lead·e^{−δn} ≤ tol
    let guess = ((lead / tolerance).ln() / constants.rate).ceil().max(1.0);
    if guess > cap as f64 {
        return Err(Error::TruncationFailure {
            tolerance,
            achieved: tail_bound(constants, stepanov, g_norm, cap),
            cap,
        });
    }
    let mut n = guess as usize;
    while n > 1 && tail_bound(constants, stepanov, g_norm, n - 1) <= tolerance {
        n -= 1;
    }
    while tail_bound(constants, stepanov, g_norm, n) > tolerance {
        n += 1;
        if n > cap {
            return Err(Error::TruncationFailure {
                tolerance,
                achieved: tail_bound(constants, stepanov, g_norm, cap),
                cap,
            });
        }
    }
    Ok(n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolution {
    pub value: Vec<f64>,
    pub tail_bound: f64,
    pub n_windows: usize,
}

/// Number of windows `solve_linear` will use for this problem and control.
pub fn resolve_windows(prob: &LinearProblem, ctrl: &SeriesControl) -> Result<usize> {
    ctrl.validate()?;
    if ctrl.tolerance > 0.0 {
        required_windows(prob.constants(), &prob.stepanov, prob.g_norm, ctrl.tolerance, ctrl.max_windows)
    } else {
        Ok(ctrl.n_windows)
    }
}

/// `Σ_{k=1}^{n} u_k(t)` summed in ascending `k`, with the certified tail.
pub fn solve_linear(prob: &LinearProblem, ctrl: &SeriesControl, t: f64) -> Result<LinearSolution> {
    let n = resolve_windows(prob, ctrl)?;
    solve_with_windows(prob, n, ctrl.nodes_per_window, t)
}

/// [`solve_linear`] at every time in `times`, evaluated concurrently, in input order.
pub fn solve_linear_many(prob: &LinearProblem, ctrl: &SeriesControl, times: &[f64]) -> Result<Vec<LinearSolution>> {
    let n = resolve_windows(prob, ctrl)?;
    times
        .par_iter()
        .map(|&t| solve_with_windows(prob, n, ctrl.nodes_per_window, t))
        .collect()
}

pub(crate) fn solve_with_windows(prob: &LinearProblem, n: usize, nodes: usize, t: f64) -> Result<LinearSolution> {
    let mut value = vec![0.0; prob.green.dim()];
    for k in 1..=n {
        let term = window_term(prob, k, t, nodes)?;
        axpy(&mut value, 1.0, &term);
    }
    Ok(LinearSolution {
        value,
        tail_bound: tail_bound(prob.constants(), &prob.stepanov, prob.g_norm, n),
        n_windows: n,
    })
}

/// `∫_s^t U(t,r)g(r)dr` by composite Simpson with `nodes` sub-intervals per unit length.
pub(crate) fn duhamel_integral<G>(green: &GreenFunction, g: G, t: f64, s: f64, nodes: usize) -> Result<Vec<f64>>
where
    G: Fn(f64) -> Result<Vec<f64>>,
{
    let family = green.family();
    let mut acc = vec![0.0; green.dim()];
    if t == s {
        return Ok(acc);
    }
    let n = ((t - s) * nodes as f64).ceil().max(2.0) as usize;
    for (r, w) in quad::simpson_rule(s, t, n) {
        let r = r.clamp(s, t);
        axpy(&mut acc, w, &family.apply(t, r, &g(r)?));
    }
    Ok(acc)
}

/// Variation-of-constants residual `‖u(t) − U(t,s)u(s) − ∫_s^t U(t,r)g(r)dr‖`.
pub fn verify_mild_solution(prob: &LinearProblem, u: &TimeSignal, t: f64, s: f64, nodes: usize) -> Result<f64> {
    mild_residual(&prob.green, u, |r| prob.forcing.eval_checked(r), t, s, nodes)
}

pub(crate) fn mild_residual<G>(green: &GreenFunction, u: &TimeSignal, g: G, t: f64, s: f64, nodes: usize) -> Result<f64>
where
    G: Fn(f64) -> Result<Vec<f64>>,
{
    if t < s {
        return Err(Error::invalid(format!("residual needs t >= s (t = {t}, s = {s})")));
    }
    let ut = u.eval_checked(t)?;
    let carried = green.family().apply(t, s, &u.eval_checked(s)?);
    let integral = duhamel_integral(green, g, t, s, nodes)?;
    let diff: Vec<f64> = ut
        .iter()
        .zip(carried.iter().zip(&integral))
        .map(|(a, (b, c))| a - b - c)
        .collect();
    Ok(green.norm().of(&diff))
}

/// The series solution as a lazily evaluated signal. Evaluation failures
/// surface as NaN components.
pub fn solution_signal(prob: &LinearProblem, ctrl: &SeriesControl) -> Result<TimeSignal> {
    let n = resolve_windows(prob, ctrl)?;
    let nodes = ctrl.nodes_per_window;
    let dim = prob.green.dim();
    let prob = Arc::new(prob.clone());
    let norm = prob.green.norm().clone();
    Ok(TimeSignal::new(dim, move |t| match solve_with_windows(&prob, n, nodes, t) {
        Ok(sol) => sol.value,
        Err(_) => vec![f64::NAN; dim],
    })
    .with_norm(norm))
}
