//! Weighted measures on the real line given by a density.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;

type Density = dyn Fn(f64) -> f64 + Send + Sync;

/// Measure `μ(A) = ∫_A ρ(t) dt` with a nonnegative density `ρ`.
///
/// Named constructors also declare that the measure has infinite total mass
/// and satisfies the translation hypothesis (M); custom densities carry no
/// such claim and can only be probed with
/// [`measure_translation_diagnostic`](crate::stepanov::measure_translation_diagnostic).
#[derive(Clone)]
pub struct WeightedMeasure {
    density: Arc<Density>,
    primitive: Option<Arc<Density>>,
    breakpoints: Vec<f64>,
    name: String,
    admissible: bool,
}

impl fmt::Debug for WeightedMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightedMeasure")
            .field("name", &self.name)
            .field("admissible", &self.admissible)
            .finish_non_exhaustive()
    }
}

const MASS_TOL: f64 = 1e-12;

impl WeightedMeasure {
    /// Custom density. `breakpoints` lists points where `ρ` is not smooth so
    /// quadrature never straddles them.
    pub fn from_density<F>(name: impl Into<String>, breakpoints: Vec<f64>, density: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        WeightedMeasure {
            density: Arc::new(density),
            primitive: None,
            breakpoints,
            name: name.into(),
            admissible: false,
        }
    }

    pub fn lebesgue() -> Self {
        WeightedMeasure {
            density: Arc::new(|_| 1.0),
            primitive: Some(Arc::new(|t| t)),
            breakpoints: Vec::new(),
            name: "lebesgue".into(),
            admissible: true,
        }
    }

    /// `ρ(t) = e^t` for `t ≤ 0` and `1` for `t > 0`.
    pub fn exp_left() -> Self {
        WeightedMeasure {
            density: Arc::new(|t: f64| if t <= 0.0 { t.exp() } else { 1.0 }),
            primitive: Some(Arc::new(|t: f64| if t <= 0.0 { t.exp() } else { 1.0 + t })),
            breakpoints: vec![0.0],
            name: "paper_sec4".into(),
            admissible: true,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether the constructor asserted hypothesis (M) and infinite total mass.
    pub fn satisfies_translation_hypothesis(&self) -> bool {
        self.admissible
    }

    #[inline]
    pub fn density(&self, t: f64) -> f64 {
        (self.density)(t)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `μ([a, b])` for `a ≤ b`; exact for named measures, adaptive quadrature otherwise.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        assert!(a <= b, "mass requires a <= b");
        if let Some(prim) = &self.primitive {
            return prim(b) - prim(a);
        }
        self.pieces(a, b)
            .map(|(lo, hi)| quad::adaptive_simpson(|t| self.density(t), lo, hi, 1e-12))
            .sum()
    }

    /// `μ([a, b])`, rejecting masses at or below the degeneracy tolerance.
    pub fn checked_mass(&self, a: f64, b: f64) -> Result<f64> {
        let m = self.mass(a, b);
        if m.is_finite() && m > MASS_TOL {
            Ok(m)
        } else {
            Err(Error::DegenerateMeasure { a, b, mass: m })
        }
    }

    /// Splits `[a, b]` at the breakpoints lying strictly inside.
    pub(crate) fn pieces(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints.iter().copied().filter(|&c| c > a && c < b));
        cuts.push(b);
        (0..cuts.len() - 1)
            .map(move |i| (cuts[i], cuts[i + 1]))
            .collect::<Vec<_>>()
            .into_iter()
    }
}
