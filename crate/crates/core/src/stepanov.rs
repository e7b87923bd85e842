//! Windowed functionals on time signals: Stepanov norms, weighted ergodic
//! means, shift defects and the measure translation probe.
//!
//! Every functional is reported at finite range only. A sup over `ℝ` is
//! replaced by a max over a finite grid of window starts, so Stepanov norms
//! computed here are lower bounds of the true norm restricted to the range.
//! Window integrals use composite Simpson with `window_nodes` sub-intervals
//! per unit window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::WeightedMeasure;
use crate::quad;
use crate::signal::TimeSignal;
use crate::space::Norm;

pub const DEFAULT_WINDOW_NODES: usize = 64;

/// Conjugate exponent `q` of `p`, with `q = ∞` stored as a flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conjugate {
    Finite(f64),
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepanovParams {
    p: f64,
    q: Conjugate,
    window_nodes: usize,
}

impl StepanovParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::invalid(format!("Stepanov exponent p = {p} must be finite and >= 1")));
        }
        let q = if p == 1.0 {
            Conjugate::Infinite
        } else {
            Conjugate::Finite(p / (p - 1.0))
        };
        Ok(StepanovParams {
            p,
            q,
            window_nodes: DEFAULT_WINDOW_NODES,
        })
    }

    pub fn with_window_nodes(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("window_quadrature_points must be positive"));
        }
        self.window_nodes = n;
        Ok(self)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> Conjugate {
        self.q
    }

    pub fn window_nodes(&self) -> usize {
        self.window_nodes
    }

    pub fn is_p1(&self) -> bool {
        self.q == Conjugate::Infinite
    }

    /// `((e^{δq} − 1)/(δq))^{1/q}`, the Hölder factor of a unit window of the
    /// kernel `e^{−δ|t−s|}`. `None` when `p = 1`.
    pub fn hoelder_factor(&self, delta: f64) -> Option<f64> {
        match self.q {
            Conjugate::Infinite => None,
            Conjugate::Finite(q) => {
                let x = delta * q;
                // ln((e^x − 1)/x) = x + ln(1 − e^{−x}) − ln x, stable for large x
                let ln = x + (-(-x).exp_m1()).ln() - x.ln();
                Some((ln / q).exp())
            }
        }
    }

    /// p-mean of `‖f‖` over `[t, t + 1]`.
    pub fn window_mean(&self, f: &TimeSignal, t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (s, w) in quad::simpson_rule(t, t + 1.0, self.window_nodes) {
            acc += w * self.pow(f.norm_at(s)?);
        }
        Ok(self.root(acc))
    }

    #[inline]
    fn pow(&self, x: f64) -> f64 {
        if self.is_p1() {
            x
        } else {
            x.powf(self.p)
        }
    }

    #[inline]
    fn root(&self, x: f64) -> f64 {
        if self.is_p1() {
            x
        } else {
            x.max(0.0).powf(1.0 / self.p)
        }
    }
}

/// Finite grid of window start points `start, start + step, …, ≤ end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl WindowGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start <= end) {
            return Err(Error::invalid(format!("window range [{start}, {end}] must be finite and ordered")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!("grid step {step} must be positive")));
        }
        Ok(WindowGrid { start, end, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// `max_t (∫_t^{t+1} ‖f(s)‖^p ds)^{1/p}` over the window starts of `range`.
pub fn stepanov_norm(f: &TimeSignal, params: &StepanovParams, range: &WindowGrid) -> Result<f64> {
    let means = range
        .points()
        .into_par_iter()
        .map(|t| params.window_mean(f, t))
        .collect::<Result<Vec<f64>>>()?;
    Ok(means.into_iter().fold(0.0, f64::max))
}

/// Composite Simpson nodes over `[-r, r]` split at the measure's breakpoints,
/// with weights already multiplied by the density.
fn weighted_nodes(mu: &WeightedMeasure, r: f64, grid_step: f64) -> Result<Vec<(f64, f64)>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("ergodic radius r = {r} must be positive")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::invalid(format!("grid step {grid_step} must be positive")));
    }
    let mut nodes = Vec::new();
    for (a, b) in mu.pieces(-r, r) {
        let n = ((b - a) / grid_step).ceil() as usize;
        nodes.extend(
            quad::simpson_rule(a, b, n)
                .into_iter()
                .map(|(t, w)| (t, w * mu.density(t))),
        );
    }
    let mass: f64 = nodes.iter().map(|&(_, w)| w).sum();
    if !(mass > 1e-12) {
        return Err(Error::DegenerateMeasure { a: -r, b: r, mass });
    }
    Ok(nodes)
}

fn weighted_mean<G>(mu: &WeightedMeasure, r: f64, grid_step: f64, mut g: G) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    let nodes = weighted_nodes(mu, r, grid_step)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, w) in nodes {
        if w == 0.0 {
            continue;
        }
        num += w * g(t)?;
        den += w;
    }
    Ok(num / den)
}

/// `(1/μ([−r,r])) ∫_{[−r,r]} ‖f(t)‖ dμ(t)`.
pub fn ergodic_mean(f: &TimeSignal, mu: &WeightedMeasure, r: f64, grid_step: f64) -> Result<f64> {
    weighted_mean(mu, r, grid_step, |t| f.norm_at(t))
}

/// Weighted mean over `[−r, r]` of the window p-means `(∫_t^{t+1}‖f‖^p)^{1/p}`.
pub fn stepanov_ergodic_mean(
    f: &TimeSignal,
    mu: &WeightedMeasure,
    params: &StepanovParams,
    r: f64,
    grid_step: f64,
) -> Result<f64> {
    weighted_mean(mu, r, grid_step, |t| params.window_mean(f, t))
}

/// `max_t (∫_t^{t+1} ‖f(s+τ) − f(s)‖^p ds)^{1/p}` over the window starts.
///
/// A small defect at unboundedly large `τ` is the numerical signature of
/// (Stepanov) almost periodicity; it cannot separate AA from AP.
pub fn shift_defect(
    f: &TimeSignal,
    tau: f64,
    params: &StepanovParams,
    range: &WindowGrid,
) -> Result<f64> {
    let norm = f.norm().clone();
    let worst = range
        .points()
        .into_par_iter()
        .map(|t| {
            let mut acc = 0.0;
            for (s, w) in quad::simpson_rule(t, t + 1.0, params.window_nodes()) {
                let shifted = f.eval_checked(s + tau)?;
                let base = f.eval_checked(s)?;
                acc += w * params.pow(norm.distance(&shifted, &base));
            }
            Ok(params.root(acc))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// `max ‖F(t+τ, s+τ) − F(t, s)‖` over the sample pairs.
pub fn bi_shift_defect<F>(kernel: F, tau: f64, pairs: &[(f64, f64)], norm: &Norm) -> Result<f64>
where
    F: Fn(f64, f64) -> Vec<f64>,
{
    if pairs.is_empty() {
        return Err(Error::invalid("bi_shift_defect needs at least one sample pair"));
    }
    let mut worst = 0.0_f64;
    for &(t, s) in pairs {
        let a = kernel(t + tau, s + tau);
        let b = kernel(t, s);
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        worst = worst.max(norm.distance(&a, &b));
    }
    Ok(worst)
}

/// `max_A μ(A + τ)/μ(A)` over the probe intervals, a finite-sample estimate of
/// the constant `β` in hypothesis (M). Probes must avoid `exclusion`.
pub fn measure_translation_diagnostic(
    mu: &WeightedMeasure,
    tau: f64,
    probes: &[(f64, f64)],
    exclusion: (f64, f64),
) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::invalid("at least one probe interval is required"));
    }
    let mut worst = 0.0_f64;
    for &(a, b) in probes {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid(format!("probe [{a}, {b}] must be finite and non-empty")));
        }
        if a < exclusion.1 && b > exclusion.0 {
            return Err(Error::invalid(format!(
                "probe [{a}, {b}] intersects the exclusion interval [{}, {}]",
                exclusion.0, exclusion.1
            )));
        }
        let base = mu.mass(a, b);
        if !(base > 1e-300) {
            return Err(Error::DegenerateProbe { a, b, mass: base });
        }
        worst = worst.max(mu.mass(a + tau, b + tau) / base);
    }
    Ok(worst)
}
