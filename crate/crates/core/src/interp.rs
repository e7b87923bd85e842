//! Grid-backed signals with local cubic interpolation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::signal::TimeSignal;
use crate::space::Norm;

/// Samples `values[i] = u(start + i·step)` of a vector signal.
///
/// Between nodes the signal is the 4-point Lagrange cubic through the nearest
/// nodes; beyond the grid it is extended by the boundary value.
#[derive(Clone, Debug)]
pub struct GridSignal {
    start: f64,
    step: f64,
    values: Arc<Vec<Vec<f64>>>,
    dim: usize,
}

impl GridSignal {
    pub fn new(start: f64, step: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("grid signal needs at least one sample"));
        }
        if !(step > 0.0 && step.is_finite() && start.is_finite()) {
            return Err(Error::invalid(format!("grid step {step} must be positive")));
        }
        let dim = values[0].len();
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(GridSignal {
            start,
            step,
            values: Arc::new(values),
            dim,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn end(&self) -> f64 {
        self.start + (self.values.len() - 1) as f64 * self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.time(i)).collect()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.values.len();
        let x = (t - self.start) / self.step;
        if x <= 0.0 {
            return self.values[0].clone();
        }
        if x >= (n - 1) as f64 {
            return self.values[n - 1].clone();
        }
        let i = x.floor() as usize;
        if n < 4 {
            let w = x - i as f64;
            return self.values[i]
                .iter()
                .zip(&self.values[i + 1])
                .map(|(a, b)| (1.0 - w) * a + w * b)
                .collect();
        }
        let first = i.saturating_sub(1).min(n - 4);
        let r = x - first as f64;
        let w = [
            -(r - 1.0) * (r - 2.0) * (r - 3.0) / 6.0,
            r * (r - 2.0) * (r - 3.0) / 2.0,
            -r * (r - 1.0) * (r - 3.0) / 2.0,
            r * (r - 1.0) * (r - 2.0) / 6.0,
        ];
        let mut out = vec![0.0; self.dim];
        for (j, wj) in w.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&self.values[first + j]) {
                *o += wj * v;
            }
        }
        out
    }

    /// Max over nodes of `norm(self[i] − other[i])`; grids must match.
    pub fn max_distance(&self, other: &GridSignal, norm: &Norm) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| norm.distance(a, b))
            .fold(0.0, f64::max)
    }

    pub fn to_signal(&self, norm: Norm) -> TimeSignal {
        let me = self.clone();
        TimeSignal::new(self.dim, move |t| me.eval(t)).with_norm(norm)
    }
}
