//! The reaction-diffusion demo: Picard mild solution against the
//! finite-difference oracle on a finite window.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catalog::{FamilySpec, GridSpec, MeasureSpec, SignalSpec, TrigTerm};
use crate::error::{Error, Result};
use crate::fd::fd_oracle;
use crate::green::SeriesControl;
use crate::heat::{build_sec4_problem, gaussian_density, HeatFamily, LipNormSource, Sec4Nonlinearity, SpatialGrid};
use crate::interp::GridSignal;
use crate::picard::{picard_iterate, IterationTrace, PicardOptions};
use crate::stepanov::WindowGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RdDemoSpec {
    pub family: FamilySpec,
    /// Almost automorphic part `a(t)` of the amplitude.
    pub amplitude: SignalSpec,
    pub lip_g: f64,
    /// Height of the Gaussian source profile added to `g`.
    pub source_height: f64,
    pub source_width: f64,
    /// Upper bound of `sup |a|`, used for the analytic `‖L_f‖_{BS¹}` bound `L_g (sup|a| + π)`.
    pub amplitude_bound: f64,
    pub measure: MeasureSpec,
    pub window: [f64; 2],
    pub time_step: f64,
    pub nodes_per_window: usize,
    pub series_tolerance: f64,
    pub picard_tol: f64,
    pub max_iter: usize,
    pub oracle_dt: f64,
}

impl Default for RdDemoSpec {
    fn default() -> Self {
        RdDemoSpec {
            family: FamilySpec::HeatSec4 {
                diffusion: SignalSpec::TrigSum {
                    offset: 1.0,
                    terms: vec![
                        TrigTerm {
                            amplitude: 0.25,
                            frequency: 1.0,
                            phase: 0.0,
                        },
                        TrigTerm {
                            amplitude: 0.25,
                            frequency: std::f64::consts::SQRT_2,
                            phase: 0.0,
                        },
                    ],
                },
                reaction: SignalSpec::TrigSum {
                    offset: -2.0,
                    terms: vec![TrigTerm {
                        amplitude: 0.5,
                        frequency: 1.0,
                        phase: 0.0,
                    }],
                },
                diffusion_floor: 0.5,
                omega: 1.5,
                grid: GridSpec {
                    half_width: 20.0,
                    n_points: 401,
                },
                probe: WindowGrid {
                    start: -100.0,
                    end: 100.0,
                    step: 0.01,
                },
                constants: None,
            },
            amplitude: SignalSpec::Sin {
                amplitude: 0.05,
                frequency: 1.0,
                phase: 0.0,
            },
            lip_g: 0.1,
            source_height: 1.0,
            source_width: 1.0,
            amplitude_bound: 0.05,
            measure: MeasureSpec::PaperSec4,
            window: [0.0, 10.0],
            time_step: 0.25,
            nodes_per_window: 16,
            series_tolerance: 1e-5,
            picard_tol: 1e-8,
            max_iter: 25,
            oracle_dt: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RdDemoOutcome {
    pub trace: IterationTrace,
    pub oracle: GridSignal,
    pub grid: SpatialGrid,
    pub family: Arc<HeatFamily>,
    /// `(Σ_t ‖u_P(t) − u_FD(t)‖²)^{1/2} / (Σ_t ‖u_FD(t)‖²)^{1/2}` over the window samples.
    pub relative_error: f64,
    pub picard_ms: f64,
    pub oracle_ms: f64,
    pub oracle_start: f64,
}

impl RdDemoOutcome {
    /// `(t, picard, oracle)` at the window sample times.
    pub fn samples(&self) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        self.trace
            .window_samples()
            .into_iter()
            .zip(self.oracle.values())
            .map(|((t, u), v)| (t, u, v.clone()))
            .collect()
    }
}

impl RdDemoSpec {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.window;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid(format!("window [{a}, {b}] must be finite and ordered")));
        }
        for (key, v) in [
            ("time_step", self.time_step),
            ("oracle_dt", self.oracle_dt),
            ("source_width", self.source_width),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{key} = {v} must be positive")));
            }
        }
        for (key, v) in [
            ("series_tolerance", self.series_tolerance),
            ("picard_tol", self.picard_tol),
            ("lip_g", self.lip_g),
            ("amplitude_bound", self.amplitude_bound),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{key} = {v} must be finite and >= 0")));
            }
        }
        if self.nodes_per_window == 0 || self.max_iter == 0 {
            return Err(Error::invalid("nodes_per_window and max_iter must be positive"));
        }
        Ok(())
    }

    pub fn nonlinearity(&self, grid: &SpatialGrid) -> Result<Sec4Nonlinearity> {
        let source = grid.sample(|x| self.source_height * gaussian_density(x, 0.0, self.source_width));
        Sec4Nonlinearity::tanh_with_source(self.amplitude.build()?, self.lip_g, source)
    }

    /// `L_g (sup|a| + π)`, an upper bound of `‖L_g |a₀|‖_{BS¹}` since `|arctan t − π/2| < π`.
    pub fn lip_norm_bound(&self) -> f64 {
        self.lip_g * (self.amplitude_bound + std::f64::consts::PI)
    }

    pub fn run(&self) -> Result<RdDemoOutcome> {
        self.validate()?;
        let family = self.family.build_heat()?;
        let grid = family.grid().clone();
        let nl = self.nonlinearity(&grid)?;
        let prob = build_sec4_problem(
            family.clone(),
            &nl,
            self.measure.build(),
            LipNormSource::Analytic(self.lip_norm_bound()),
        )?;
        let ctrl = SeriesControl::with_tolerance(self.series_tolerance).nodes(self.nodes_per_window);
        let [t_start, t_end] = self.window;
        let window = WindowGrid::new(t_start, t_end, self.time_step)?;
        let opts = PicardOptions {
            max_iter: self.max_iter,
            tol: self.picard_tol,
            ..PicardOptions::default()
        };
        let clock = Instant::now();
        let trace = picard_iterate(&prob, &ctrl, &window, None, &opts)?;
        let picard_ms = clock.elapsed().as_secs_f64() * 1e3;

        let omega = family.coefficients().omega();
        let oracle_start = t_start - 10.0 / omega;
        let f = nl.to_nonlinearity(grid.n_points())?;
        let clock = Instant::now();
        let oracle = fd_oracle(
            &grid,
            family.coefficients(),
            &f,
            oracle_start,
            t_start,
            t_end,
            self.oracle_dt,
            self.time_step,
        )?;
        let oracle_ms = clock.elapsed().as_secs_f64() * 1e3;

        let norm = grid.norm();
        let (mut num, mut den) = (0.0, 0.0);
        for ((_, u), v) in trace.window_samples().iter().zip(oracle.values()) {
            num += norm.distance(u, v).powi(2);
            den += norm.of(v).powi(2);
        }
        let relative_error = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
        Ok(RdDemoOutcome {
            trace,
            oracle,
            grid,
            family,
            relative_error,
            picard_ms,
            oracle_ms,
            oracle_start,
        })
    }
}
