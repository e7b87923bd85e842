//! Method-of-lines oracle for the reaction-diffusion application.
//!
//! Second-order centered differences in space with zero ghost values outside
//! the grid, Crank-Nicolson in time. The reaction term is averaged over the
//! step and resolved by fixed-point corrections.

use crate::error::{Error, Result};
use crate::heat::{HeatCoefficients, SpatialGrid};
use crate::interp::GridSignal;
use crate::signal::Nonlinearity;

const CORRECTIONS: usize = 4;

/// Solves `a·x_{i−1} + b·x_i + a·x_{i+1} = r_i` for a constant symmetric tridiagonal matrix.
fn thomas(a: f64, b: f64, rhs: &[f64], scratch: &mut Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut x = vec![0.0; n];
    let mut denom = b;
    scratch[0] = a / denom;
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = b - a * scratch[i - 1];
        scratch[i] = a / denom;
        x[i] = (rhs[i] - a * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= scratch[i] * x[i + 1];
    }
    x
}

/// `δ ∂²u/∂x² + α u` with zero ghost values.
fn linear_part(u: &[f64], delta: f64, alpha: f64, h2: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let right = if i + 1 == n { 0.0 } else { u[i + 1] };
            delta * (left - 2.0 * u[i] + right) / h2 + alpha * u[i]
        })
        .collect()
}

struct Stepper<'a> {
    grid: &'a SpatialGrid,
    coeffs: &'a HeatCoefficients,
    reaction: &'a Nonlinearity,
    scratch: Vec<f64>,
}

impl Stepper<'_> {
    fn step(&mut self, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
        let h2 = self.grid.spacing().powi(2);
        let t1 = t + dt;
        let (d0, a0) = (self.coeffs.delta(t), self.coeffs.alpha(t));
        let (d1, a1) = (self.coeffs.delta(t1), self.coeffs.alpha(t1));
        let explicit = linear_part(u, d0, a0, h2);
        let n0 = self.reaction.apply(t, u);
        let base: Vec<f64> = u
            .iter()
            .zip(&explicit)
            .zip(&n0)
            .map(|((v, e), r)| v + 0.5 * dt * (e + r))
            .collect();
        let off = -0.5 * dt * d1 / h2;
        let diag = 1.0 - 0.5 * dt * a1 + dt * d1 / h2;
        let mut next = u.to_vec();
        let mut n1 = n0.clone();
        for _ in 0..CORRECTIONS {
            let rhs: Vec<f64> = base.iter().zip(&n1).map(|(b, r)| b + 0.5 * dt * r).collect();
            next = thomas(off, diag, &rhs, &mut self.scratch);
            n1 = self.reaction.apply(t1, &next);
        }
        let norm = self.grid.norm();
        let before = norm.of(u);
        let after = norm.of(&next);
        if !after.is_finite() {
            return Err(Error::OracleInstability { t: t1, growth: f64::INFINITY });
        }
        let allowance = (a0.abs().max(a1.abs()) * dt).exp() * before + 0.5 * dt * (norm.of(&n0) + norm.of(&n1));
        if after > allowance * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::OracleInstability {
                t: t1,
                growth: if before > 0.0 { after / before } else { f64::INFINITY },
            });
        }
        Ok(next)
    }
}

/// Solution of `∂u/∂t = δ(t)∂²u/∂x² + α(t)u + f(t,u)` from zero data at `t0`,
/// sampled every `sample_step` on `[t_start, t_end]`.
#[allow(clippy::too_many_arguments)]
pub fn fd_oracle(
    grid: &SpatialGrid,
    coeffs: &HeatCoefficients,
    reaction: &Nonlinearity,
    t0: f64,
    t_start: f64,
    t_end: f64,
    dt: f64,
    sample_step: f64,
) -> Result<GridSignal> {
    if !(t0 < t_start && t_start < t_end) {
        return Err(Error::invalid(format!("oracle needs t0 < T0 < T1, got {t0}, {t_start}, {t_end}")));
    }
    if !(dt > 0.0 && sample_step > 0.0) {
        return Err(Error::invalid("oracle steps must be positive"));
    }
    if reaction.dim() != grid.n_points() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points(),
            got: reaction.dim(),
        });
    }
    let mut stepper = Stepper {
        grid,
        coeffs,
        reaction,
        scratch: Vec::new(),
    };
    let mut u = vec![0.0; grid.n_points()];
    let burn_steps = ((t_start - t0) / dt).ceil() as usize;
    let burn_dt = (t_start - t0) / burn_steps as f64;
    for i in 0..burn_steps {
        u = stepper.step(&u, t0 + i as f64 * burn_dt, burn_dt)?;
    }
    let per_sample = (sample_step / dt).ceil() as usize;
    let sub_dt = sample_step / per_sample as f64;
    let samples = ((t_end - t_start) / sample_step + 1e-9).floor() as usize;
    let mut values = Vec::with_capacity(samples + 1);
    values.push(u.clone());
    for j in 0..samples {
        let base = t_start + j as f64 * sample_step;
        for i in 0..per_sample {
            u = stepper.step(&u, base + i as f64 * sub_dt, sub_dt)?;
        }
        values.push(u.clone());
    }
    GridSignal::new(t_start, sample_step, values)
}
