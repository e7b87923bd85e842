//! Time signals: total, deterministic maps from time to a state vector.
//!
//! Signals are callables rather than sample arrays because the improper
//! integrals downstream evaluate them at quadrature nodes that are not known
//! in advance. A signal may carry class metadata: a claimed function class and,
//! optionally, an explicit split into an almost automorphic part and an
//! ergodic part.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Norm;

type EvalFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Function classes a signal can be declared to belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionClass {
    /// Bohr almost periodic.
    Ap,
    /// Bochner almost automorphic.
    Aa,
    /// Almost automorphic in the Stepanov sense.
    SpAa,
    /// Ergodic with respect to a weighted measure.
    MuErgodic,
    /// AA part plus mu-ergodic part.
    MuPaa,
    /// Stepanov AA part plus Stepanov mu-ergodic part.
    SpMuPaa,
}

/// Declared class of a signal, with its decomposition when one is known.
#[derive(Clone)]
pub struct ClassMeta {
    pub claimed: FunctionClass,
    pub parts: Option<ClassDecomposition>,
}

/// `parent = aa_part + ergodic_part`, checked by sampling.
#[derive(Clone)]
pub struct ClassDecomposition {
    pub aa_part: TimeSignal,
    pub ergodic_part: TimeSignal,
}

#[derive(Clone)]
pub struct TimeSignal {
    eval: Arc<EvalFn>,
    dim: usize,
    norm: Norm,
    meta: Option<Arc<ClassMeta>>,
}

impl fmt::Debug for TimeSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeSignal")
            .field("dim", &self.dim)
            .field("class", &self.class())
            .finish_non_exhaustive()
    }
}

impl TimeSignal {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        assert!(dim > 0, "signal dimension must be positive");
        TimeSignal {
            eval: Arc::new(f),
            dim,
            norm: Norm::Sup,
            meta: None,
        }
    }

    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(1, move |t| vec![f(t)])
    }

    pub fn constant(value: Vec<f64>) -> Self {
        let dim = value.len();
        Self::new(dim, move |_| value.clone())
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| vec![0.0; dim])
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    /// Tags the signal with a claimed class (bookkeeping only).
    pub fn with_class(mut self, claimed: FunctionClass) -> Self {
        let parts = self.meta.as_ref().and_then(|m| m.parts.clone());
        self.meta = Some(Arc::new(ClassMeta { claimed, parts }));
        self
    }

    /// Attaches an explicit decomposition `self = aa_part + ergodic_part`.
    pub fn with_decomposition(
        mut self,
        aa_part: TimeSignal,
        ergodic_part: TimeSignal,
        claimed: FunctionClass,
    ) -> Result<Self> {
        for part in [&aa_part, &ergodic_part] {
            if part.dim != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: part.dim,
                });
            }
        }
        self.meta = Some(Arc::new(ClassMeta {
            claimed,
            parts: Some(ClassDecomposition {
                aa_part,
                ergodic_part,
            }),
        }));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> &Norm {
        &self.norm
    }

    pub fn class(&self) -> Option<FunctionClass> {
        self.meta.as_ref().map(|m| m.claimed)
    }

    pub fn decomposition(&self) -> Option<&ClassDecomposition> {
        self.meta.as_ref().and_then(|m| m.parts.as_ref())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Vec<f64> {
        (self.eval)(t)
    }

    /// Evaluates and rejects NaN or infinite components.
    pub fn eval_checked(&self, t: f64) -> Result<Vec<f64>> {
        let v = (self.eval)(t);
        if v.iter().all(|x| x.is_finite()) {
            Ok(v)
        } else {
            Err(Error::NonFinite { t })
        }
    }

    /// First component; meant for scalar signals.
    #[inline]
    pub fn eval_scalar(&self, t: f64) -> f64 {
        (self.eval)(t)[0]
    }

    pub fn norm_at(&self, t: f64) -> Result<f64> {
        let v = self.eval_checked(t)?;
        Ok(self.norm.of(&v))
    }

    pub fn sum(&self, other: &TimeSignal) -> Result<TimeSignal> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(TimeSignal::new(self.dim, move |t| {
            let mut v = a.eval(t);
            for (x, y) in v.iter_mut().zip(b.eval(t)) {
                *x += y;
            }
            v
        })
        .with_norm(self.norm.clone()))
    }

    pub fn scale(&self, c: f64) -> TimeSignal {
        let a = self.clone();
        TimeSignal::new(self.dim, move |t| a.eval(t).into_iter().map(|x| c * x).collect())
            .with_norm(self.norm.clone())
    }

    /// Pointwise product; a scalar factor broadcasts over the other's components.
    pub fn product(&self, other: &TimeSignal) -> Result<TimeSignal> {
        let dim = match (self.dim, other.dim) {
            (a, b) if a == b => a,
            (1, b) => b,
            (a, 1) => a,
            (a, b) => {
                return Err(Error::DimensionMismatch {
                    expected: a,
                    got: b,
                })
            }
        };
        let (a, b) = (self.clone(), other.clone());
        let norm = if self.dim == dim {
            self.norm.clone()
        } else {
            other.norm.clone()
        };
        Ok(TimeSignal::new(dim, move |t| {
            let x = a.eval(t);
            let y = b.eval(t);
            (0..dim)
                .map(|i| x[if x.len() == 1 { 0 } else { i }] * y[if y.len() == 1 { 0 } else { i }])
                .collect()
        })
        .with_norm(norm))
    }

    /// Signal shifted in time: `t ↦ self(t + tau)`.
    pub fn shifted(&self, tau: f64) -> TimeSignal {
        let a = self.clone();
        TimeSignal::new(self.dim, move |t| a.eval(t + tau)).with_norm(self.norm.clone())
    }
}

impl ClassDecomposition {
    /// Largest pointwise defect `‖parent − aa − ergodic‖` over the sample times.
    pub fn max_defect(&self, parent: &TimeSignal, samples: &[f64]) -> Result<f64> {
        let mut worst = 0.0_f64;
        for &t in samples {
            let p = parent.eval_checked(t)?;
            let a = self.aa_part.eval_checked(t)?;
            let e = self.ergodic_part.eval_checked(t)?;
            let r: Vec<f64> = p
                .iter()
                .zip(a.iter().zip(&e))
                .map(|(p, (a, e))| p - a - e)
                .collect();
            worst = worst.max(parent.norm.of(&r));
        }
        Ok(worst)
    }
}

type StateMap = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// A time-dependent map `(t, x) ↦ f(t, x)` together with its Lipschitz modulus
/// `L_f(t)`, i.e. `‖f(t,x) − f(t,y)‖ ≤ L_f(t)‖x − y‖`.
#[derive(Clone)]
pub struct Nonlinearity {
    map: StateMap,
    dim: usize,
    lip_modulus: TimeSignal,
    class: Option<FunctionClass>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("dim", &self.dim)
            .field("class", &self.class)
            .finish_non_exhaustive()
    }
}

impl Nonlinearity {
    pub fn new<F>(dim: usize, lip_modulus: TimeSignal, f: F) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if lip_modulus.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: lip_modulus.dim(),
            });
        }
        Ok(Nonlinearity {
            map: Arc::new(f),
            dim,
            lip_modulus,
            class: None,
        })
    }

    /// A forcing that ignores the state: `f(t, x) = g(t)`, with `L_f ≡ 0`.
    pub fn forcing(g: TimeSignal) -> Self {
        let dim = g.dim();
        Nonlinearity {
            map: Arc::new(move |t, _| g.eval(t)),
            dim,
            lip_modulus: TimeSignal::scalar(|_| 0.0),
            class: None,
        }
    }

    pub fn with_class(mut self, class: FunctionClass) -> Self {
        self.class = Some(class);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class(&self) -> Option<FunctionClass> {
        self.class
    }

    pub fn lip_modulus(&self) -> &TimeSignal {
        &self.lip_modulus
    }

    #[inline]
    pub fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        (self.map)(t, x)
    }
}

/// The signal `t ↦ f(t, u(t))`.
///
/// When both `f` and `u` carry class metadata the result is tagged
/// [`FunctionClass::SpMuPaa`]; the tag is bookkeeping and nothing is checked
/// numerically.
pub fn compose(f: &Nonlinearity, u: &TimeSignal) -> Result<TimeSignal> {
    if f.dim != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            got: u.dim(),
        });
    }
    let (map, inner) = (f.map.clone(), u.clone());
    let composed = TimeSignal::new(f.dim, move |t| map(t, &inner.eval(t))).with_norm(u.norm.clone());
    Ok(match (f.class, u.class()) {
        (Some(_), Some(_)) => composed.with_class(FunctionClass::SpMuPaa),
        _ => composed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_composition_reproduces_u() {
        let u = TimeSignal::new(2, |t| vec![t.sin(), t * t]);
        let id = Nonlinearity::new(2, TimeSignal::scalar(|_| 1.0), |_, x| x.to_vec()).unwrap();
        let c = compose(&id, &u).unwrap();
        for t in [-3.0, 0.0, 0.7, 12.5] {
            assert_eq!(c.eval(t), u.eval(t));
        }
    }

    #[test]
    fn zero_map_gives_zero_signal() {
        let u = TimeSignal::scalar(|t| t.cos());
        let z = Nonlinearity::new(1, TimeSignal::scalar(|_| 0.0), |_, _| vec![0.0]).unwrap();
        let c = compose(&z, &u).unwrap();
        assert_eq!(c.eval(3.3), vec![0.0]);
    }

    #[test]
    fn compose_rejects_dimension_mismatch() {
        let u = TimeSignal::constant(vec![1.0, 2.0, 3.0]);
        let f = Nonlinearity::new(2, TimeSignal::scalar(|_| 1.0), |_, x| x.to_vec()).unwrap();
        assert!(matches!(
            compose(&f, &u),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn compose_with_drifting_amplitude() {
        use std::f64::consts::FRAC_PI_2;
        let a0 = |t: f64| t.sin() + (t.atan() - FRAC_PI_2);
        let f = Nonlinearity::new(1, TimeSignal::scalar(move |t| a0(t).abs()), move |t, x| {
            vec![a0(t) * x[0].tanh()]
        })
        .unwrap();
        let c = compose(&f, &TimeSignal::constant(vec![1.0])).unwrap();
        for t in [-10.0f64, -1.0, 0.0, 2.0, 50.0] {
            let expected = (t.sin() + t.atan() - FRAC_PI_2) * 1.0_f64.tanh();
            assert!((c.eval_scalar(t) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn composition_class_tag() {
        let u = TimeSignal::scalar(|t| t.sin()).with_class(FunctionClass::Ap);
        let f = Nonlinearity::new(1, TimeSignal::scalar(|_| 0.5), |_, x| vec![0.5 * x[0]])
            .unwrap()
            .with_class(FunctionClass::SpMuPaa);
        assert_eq!(compose(&f, &u).unwrap().class(), Some(FunctionClass::SpMuPaa));
        let untagged = TimeSignal::scalar(|t| t.sin());
        assert_eq!(compose(&f, &untagged).unwrap().class(), None);
    }

    #[test]
    fn eval_checked_reports_time() {
        let s = TimeSignal::scalar(|t| 1.0 / t);
        match s.eval_checked(0.0) {
            Err(Error::NonFinite { t }) => assert_eq!(t, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decomposition_defect_is_tiny() {
        use std::f64::consts::FRAC_PI_2;
        let aa = TimeSignal::scalar(|t| t.sin());
        let erg = TimeSignal::scalar(|t| t.atan() - FRAC_PI_2);
        let parent = aa
            .sum(&erg)
            .unwrap()
            .with_decomposition(aa.clone(), erg.clone(), FunctionClass::MuPaa)
            .unwrap();
        let samples: Vec<f64> = (0..1000).map(|i| -500.0 + i as f64 * 1.001).collect();
        let d = parent
            .decomposition()
            .unwrap()
            .max_defect(&parent, &samples)
            .unwrap();
        assert!(d <= 1e-12);
    }
}
