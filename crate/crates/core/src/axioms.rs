//! Sampled checks of the dichotomy axioms for any family.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::evolution::{DichotomyFamily, GreenFunction};

/// One trial: times `s ≤ r ≤ t` and a state `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomSample {
    pub s: f64,
    pub r: f64,
    pub t: f64,
    pub x: Vec<f64>,
}

/// Worst observed defect per axiom. Cocycle, commutation and inverse defects
/// are relative to `max(1, ‖reference‖)`; decay and envelope defects are the
/// excess over `M e^{−δ|t−s|}‖x‖`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AxiomDefects {
    pub cocycle: f64,
    pub identity: f64,
    pub commutation: f64,
    pub idempotence: f64,
    pub decay: f64,
    pub inverse: f64,
    pub green_envelope: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxiomTolerances {
    pub relative: f64,
    pub slack: f64,
}

impl Default for AxiomTolerances {
    fn default() -> Self {
        AxiomTolerances {
            relative: 1e-8,
            slack: 1e-8,
        }
    }
}

impl AxiomDefects {
    fn max(self, o: AxiomDefects) -> AxiomDefects {
        AxiomDefects {
            cocycle: self.cocycle.max(o.cocycle),
            identity: self.identity.max(o.identity),
            commutation: self.commutation.max(o.commutation),
            idempotence: self.idempotence.max(o.idempotence),
            decay: self.decay.max(o.decay),
            inverse: self.inverse.max(o.inverse),
            green_envelope: self.green_envelope.max(o.green_envelope),
        }
    }

    /// `(name, defect, tolerance)` rows; identity and idempotence must be exact.
    pub fn rows(&self, tol: AxiomTolerances) -> [(&'static str, f64, f64); 7] {
        [
            ("cocycle", self.cocycle, tol.relative),
            ("identity", self.identity, 0.0),
            ("commutation", self.commutation, tol.relative),
            ("idempotence", self.idempotence, 0.0),
            ("decay", self.decay, tol.slack),
            ("inverse", self.inverse, tol.relative),
            ("green_envelope", self.green_envelope, tol.slack),
        ]
    }

    pub fn within(&self, tol: AxiomTolerances) -> bool {
        self.rows(tol).iter().all(|(_, d, t)| d <= t)
    }
}

fn one(fam: &dyn DichotomyFamily, green: &GreenFunction, smp: &AxiomSample) -> AxiomDefects {
    let AxiomSample { s, r, t, ref x } = *smp;
    let norm = fam.norm();
    let c = fam.constants();
    let rel = |a: &[f64], b: &[f64]| norm.distance(a, b) / norm.of(b).max(1.0);
    let nx = norm.of(x);

    let direct = fam.apply(t, s, x);
    let chained = fam.apply(t, r, &fam.apply(r, s, x));
    let carried = fam.apply(t, s, &fam.project_stable(s, x));
    let p = fam.project_stable(t, x);
    let back = fam.apply_inverse_unstable(s, t, &fam.project_unstable(t, x));
    let q = fam.project_unstable(s, x);
    let there = fam.apply(t, s, &q);
    let envelope = [(t, s), (s, t)]
        .iter()
        .map(|&(a, b)| norm.of(&green.apply(a, b, x)) - c.envelope(a - b) * nx)
        .fold(f64::NEG_INFINITY, f64::max);
    AxiomDefects {
        cocycle: rel(&chained, &direct),
        identity: norm.distance(&fam.apply(t, t, x), x),
        commutation: rel(&carried, &fam.project_stable(t, &direct)),
        idempotence: norm.distance(&fam.project_stable(t, &p), &p),
        decay: (norm.of(&carried) - c.envelope(t - s) * nx).max(norm.of(&back) - c.envelope(t - s) * nx),
        inverse: rel(&fam.apply_inverse_unstable(s, t, &there), &q),
        green_envelope: envelope,
    }
}

/// Worst defects of cocycle, identity, commutation, idempotence, decay,
/// inverse and Green envelope over the samples.
pub fn check_axioms(fam: &Arc<dyn DichotomyFamily>, samples: &[AxiomSample]) -> AxiomDefects {
    let green = GreenFunction::new(fam.clone());
    samples
        .par_iter()
        .map(|smp| one(fam.as_ref(), &green, smp))
        .reduce(AxiomDefects::default, AxiomDefects::max)
}
