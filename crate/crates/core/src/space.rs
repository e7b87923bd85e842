use std::sync::Arc;

/// Norm of a finite-dimensional state space.
///
/// ODE test-beds use the sup-norm; spatial grids use a weighted discrete L²
/// norm whose weights are the grid's quadrature weights.
#[derive(Clone, Debug, Default)]
pub enum Norm {
    #[default]
    Sup,
    WeightedL2(Arc<[f64]>),
}

impl Norm {
    pub fn weighted_l2(weights: Vec<f64>) -> Self {
        Norm::WeightedL2(weights.into())
    }

    pub fn of(&self, x: &[f64]) -> f64 {
        match self {
            Norm::Sup => x.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            Norm::WeightedL2(w) => {
                debug_assert_eq!(w.len(), x.len());
                w.iter().zip(x).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
            }
        }
    }

    /// ‖x − y‖ without allocating the difference.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Norm::Sup => x
                .iter()
                .zip(y)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
            Norm::WeightedL2(w) => w
                .iter()
                .zip(x.iter().zip(y))
                .map(|(w, (a, b))| w * (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

pub(crate) fn axpy(acc: &mut [f64], c: f64, x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += c * v;
    }
}
