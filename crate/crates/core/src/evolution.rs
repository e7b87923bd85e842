//! Evolution families with exponential dichotomy and their Green's function.
//!
//! Sign convention: the Green's function carries the minus sign of the
//! unstable branch,
//!
//! ```text
//! Γ(t,s) =  U(t,s)P(s)      for s ≤ t
//! Γ(t,s) = −Ũ(t,s)Q(s)      for s > t
//! ```
//!
//! so that the bounded solution of `u' = A(t)u + g` is literally
//! `u(t) = ∫ Γ(t,s) g(s) ds`. The diagonal `s = t` belongs to the stable branch.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::signal::TimeSignal;
use crate::space::Norm;
use crate::stepanov::WindowGrid;

/// Dichotomy amplitude `M ≥ 1` and decay rate `δ > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyConstants {
    #[serde(rename = "M")]
    pub amplitude: f64,
    #[serde(rename = "delta")]
    pub rate: f64,
}

impl DichotomyConstants {
    pub fn new(amplitude: f64, rate: f64) -> Result<Self> {
        if !(amplitude >= 1.0 && amplitude.is_finite()) {
            return Err(Error::invalid(format!("dichotomy amplitude M = {amplitude} must be >= 1")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid(format!("dichotomy rate delta = {rate} must be > 0")));
        }
        Ok(DichotomyConstants { amplitude, rate })
    }

    /// `M e^{−δ|t−s|}`.
    pub fn envelope(&self, gap: f64) -> f64 {
        self.amplitude * (-self.rate * gap.abs()).exp()
    }
}

/// Evolution family `U(t,s)` with an exponential dichotomy.
///
/// `apply` requires `t ≥ s`; `apply_inverse_unstable` requires `s ≥ t` and
/// returns `Ũ(t,s)Q(s)x`, the inverse of `U(s,t)` on the unstable range.
pub trait DichotomyFamily: Send + Sync {
    fn dim(&self) -> usize;

    /// Norm of the state space.
    fn norm(&self) -> &Norm;

    fn constants(&self) -> DichotomyConstants;

    fn apply(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64>;

    fn project_stable(&self, t: f64, x: &[f64]) -> Vec<f64>;

    fn project_unstable(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let p = self.project_stable(t, x);
        x.iter().zip(p).map(|(a, b)| a - b).collect()
    }

    fn apply_inverse_unstable(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64>;

    /// `P ≡ I`: the unstable branch of the Green's function vanishes.
    fn is_exponentially_stable(&self) -> bool {
        false
    }
}

/// Green's function of a dichotomic family, with the minus sign baked into
/// the unstable branch.
#[derive(Clone)]
pub struct GreenFunction {
    family: Arc<dyn DichotomyFamily>,
}

impl fmt::Debug for GreenFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GreenFunction")
            .field("dim", &self.family.dim())
            .field("constants", &self.family.constants())
            .finish()
    }
}

impl GreenFunction {
    pub fn new(family: Arc<dyn DichotomyFamily>) -> Self {
        GreenFunction { family }
    }

    pub fn family(&self) -> &Arc<dyn DichotomyFamily> {
        &self.family
    }

    pub fn constants(&self) -> DichotomyConstants {
        self.family.constants()
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn norm(&self) -> &Norm {
        self.family.norm()
    }

    /// `Γ(t,s)x`.
    pub fn apply(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64> {
        if s <= t {
            self.family.apply(t, s, &self.family.project_stable(s, x))
        } else if self.family.is_exponentially_stable() {
            vec![0.0; x.len()]
        } else {
            let q = self.family.project_unstable(s, x);
            self.family
                .apply_inverse_unstable(t, s, &q)
                .into_iter()
                .map(|v| -v)
                .collect()
        }
    }
}

/// Cached integrals `∫_s^t f(τ)dτ` of a scalar coefficient.
///
/// Unit pieces `[k, k+1]` are integrated once by adaptive Simpson and
/// memoized; partial pieces at the ends are integrated on demand. The cache
/// takes concurrent readers and serializes inserts.
pub struct CoefficientIntegral {
    f: TimeSignal,
    tol: f64,
    cache: RwLock<HashMap<i64, f64>>,
}

impl fmt::Debug for CoefficientIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientIntegral").field("tol", &self.tol).finish_non_exhaustive()
    }
}

pub const COEFFICIENT_TOL: f64 = 1e-10;

impl CoefficientIntegral {
    pub fn new(f: TimeSignal) -> Self {
        CoefficientIntegral {
            f,
            tol: COEFFICIENT_TOL,
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn piece(&self, a: f64, b: f64) -> f64 {
        quad::adaptive_simpson(|t| self.f.eval_scalar(t), a, b, self.tol)
    }

    fn unit(&self, k: i64) -> f64 {
        if let Some(v) = self.cache.read().expect("coefficient cache poisoned").get(&k) {
            return *v;
        }
        let v = self.piece(k as f64, k as f64 + 1.0);
        self.cache
            .write()
            .expect("coefficient cache poisoned")
            .entry(k)
            .or_insert(v);
        v
    }

    /// `∫_s^t f`, signed.
    pub fn integrate(&self, s: f64, t: f64) -> f64 {
        if s == t {
            return 0.0;
        }
        if s > t {
            return -self.integrate(t, s);
        }
        let ks = s.floor() as i64;
        let kt = t.floor() as i64;
        if ks == kt {
            return self.piece(s, t);
        }
        let mut total = self.piece(s, (ks + 1) as f64);
        for k in ks + 1..kt {
            total += self.unit(k);
        }
        if (kt as f64) < t {
            total += self.piece(kt as f64, t);
        }
        total
    }

    pub fn signal(&self) -> &TimeSignal {
        &self.f
    }
}

/// `U(t,s) = diag(e^{λᵢ(t−s)})` with `P` projecting onto the decaying coordinates.
#[derive(Clone, Debug)]
pub struct DiagonalFamily {
    rates: Vec<f64>,
    constants: DichotomyConstants,
    norm: Norm,
}

impl DiagonalFamily {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::invalid("at least one rate is required"));
        }
        if let Some(index) = rates.iter().position(|&r| r == 0.0) {
            return Err(Error::NonHyperbolic { index });
        }
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("rates must be finite"));
        }
        let rate = rates.iter().fold(f64::INFINITY, |m, r| m.min(r.abs()));
        Ok(DiagonalFamily {
            constants: DichotomyConstants::new(1.0, rate)?,
            rates,
            norm: Norm::Sup,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}

impl DichotomyFamily for DiagonalFamily {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn norm(&self) -> &Norm {
        &self.norm
    }

    fn constants(&self) -> DichotomyConstants {
        self.constants
    }

    fn apply(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64> {
        assert!(t >= s, "U(t,s) needs t >= s (t = {t}, s = {s})");
        self.rates
            .iter()
            .zip(x)
            .map(|(l, v)| (l * (t - s)).exp() * v)
            .collect()
    }

    fn project_stable(&self, _t: f64, x: &[f64]) -> Vec<f64> {
        self.rates
            .iter()
            .zip(x)
            .map(|(&l, &v)| if l < 0.0 { v } else { 0.0 })
            .collect()
    }

    fn apply_inverse_unstable(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64> {
        assert!(s >= t, "Ũ(t,s) needs s >= t (t = {t}, s = {s})");
        self.rates
            .iter()
            .zip(x)
            .map(|(&l, &v)| if l > 0.0 { (l * (t - s)).exp() * v } else { 0.0 })
            .collect()
    }

    fn is_exponentially_stable(&self) -> bool {
        self.rates.iter().all(|&l| l < 0.0)
    }
}

/// Checks `α(t) ≤ −ω` on the probe grid.
pub(crate) fn check_upper_bound(signal: &TimeSignal, bound: f64, probe: &WindowGrid, what: &str) -> Result<()> {
    for t in probe.points() {
        let v = signal.eval_scalar(t);
        if !v.is_finite() {
            return Err(Error::NonFinite { t });
        }
        if v > bound + 1e-12 {
            return Err(Error::HypothesisViolation {
                t,
                what: format!("{what} = {v} exceeds {bound}"),
            });
        }
    }
    Ok(())
}

/// Scalar family `U(t,s)x = e^{∫_s^t α(τ)dτ}x` with `α ≤ −ω`; exponentially stable.
pub struct ScalarAlphaFamily {
    alpha: CoefficientIntegral,
    dim: usize,
    constants: DichotomyConstants,
    norm: Norm,
}

impl fmt::Debug for ScalarAlphaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarAlphaFamily")
            .field("dim", &self.dim)
            .field("constants", &self.constants)
            .finish()
    }
}

impl ScalarAlphaFamily {
    /// Validates `α(t) ≤ −ω` on `probe`; acts on `dim` components.
    pub fn new(alpha: TimeSignal, omega: f64, probe: &WindowGrid, dim: usize) -> Result<Self> {
        if alpha.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: alpha.dim(),
            });
        }
        if dim == 0 {
            return Err(Error::invalid("family dimension must be positive"));
        }
        check_upper_bound(&alpha, -omega, probe, "alpha")?;
        Ok(ScalarAlphaFamily {
            alpha: CoefficientIntegral::new(alpha),
            dim,
            constants: DichotomyConstants::new(1.0, omega)?,
            norm: Norm::Sup,
        })
    }

    /// Constant rate `α ≡ −rate`.
    pub fn constant_rate(rate: f64) -> Result<Self> {
        let probe = WindowGrid::new(0.0, 0.0, 1.0)?;
        Self::new(TimeSignal::scalar(move |_| -rate), rate, &probe, 1)
    }

    pub fn exponent(&self, t: f64, s: f64) -> f64 {
        self.alpha.integrate(s, t)
    }
}

impl DichotomyFamily for ScalarAlphaFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn norm(&self) -> &Norm {
        &self.norm
    }

    fn constants(&self) -> DichotomyConstants {
        self.constants
    }

    fn apply(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64> {
        assert!(t >= s, "U(t,s) needs t >= s (t = {t}, s = {s})");
        let factor = self.exponent(t, s).exp();
        x.iter().map(|v| factor * v).collect()
    }

    fn project_stable(&self, _t: f64, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn apply_inverse_unstable(&self, _t: f64, _s: f64, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn is_exponentially_stable(&self) -> bool {
        true
    }
}

type MatrixFn = dyn Fn(f64) -> DMatrix<f64> + Send + Sync;

/// Time-varying matrix family `u' = A(t)u`, propagated by fixed-step RK4.
///
/// The splitting is a constant coordinate projection: `A(t)` must be block
/// diagonal with respect to the stable and unstable coordinates so that
/// `P` commutes with `U(t,s)`. Dichotomy constants are supplied by the caller
/// and are never estimated.
pub struct MatrixFamily {
    a_of_t: Arc<MatrixFn>,
    stable: Vec<bool>,
    step: f64,
    constants: DichotomyConstants,
    norm: Norm,
}

impl fmt::Debug for MatrixFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixFamily")
            .field("stable", &self.stable)
            .field("step", &self.step)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

pub const DEFAULT_PROPAGATOR_STEP: f64 = 1e-3;

impl MatrixFamily {
    pub fn new<F>(
        stable: Vec<bool>,
        constants: DichotomyConstants,
        step: f64,
        probe: &WindowGrid,
        a_of_t: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!("propagator step {step} must be positive")));
        }
        let n = stable.len();
        for t in probe.points() {
            let a = a_of_t(t);
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: a.nrows(),
                });
            }
            for i in 0..n {
                for j in 0..n {
                    if stable[i] != stable[j] && a[(i, j)] != 0.0 {
                        return Err(Error::HypothesisViolation {
                            t,
                            what: format!("A({i},{j}) couples the stable and unstable blocks"),
                        });
                    }
                }
            }
        }
        Ok(MatrixFamily {
            a_of_t: Arc::new(a_of_t),
            stable,
            step,
            constants,
            norm: Norm::Sup,
        })
    }

    /// A non-commuting saddle: a rotating-shear stable 2×2 block and one
    /// unstable coordinate,
    ///
    /// ```text
    /// A(t) = [ −3      sin t   0            ]
    ///        [ ½cos t  −3      0            ]
    ///        [ 0       0       2 + ½ sin t  ]
    /// ```
    ///
    /// Row sums give the sup-norm log-norm bound −2 on the stable block and a
    /// growth rate ≥ 3/2 on the unstable one, hence `M = 1`, `δ = 3/2`.
    pub fn coupled_saddle() -> Self {
        let probe = WindowGrid::new(-50.0, 50.0, 0.05).expect("static probe");
        Self::new(
            vec![true, true, false],
            DichotomyConstants::new(1.0, 1.5).expect("static constants"),
            DEFAULT_PROPAGATOR_STEP,
            &probe,
            |t: f64| {
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[
                        -3.0, t.sin(), 0.0, //
                        0.5 * t.cos(), -3.0, 0.0, //
                        0.0, 0.0, 2.0 + 0.5 * t.sin(),
                    ],
                )
            },
        )
        .expect("coupled saddle is block diagonal")
    }

    pub fn matrix_at(&self, t: f64) -> DMatrix<f64> {
        (self.a_of_t)(t)
    }

    /// RK4 from `from` to `to` (either direction) with at most `self.step` per step.
    fn propagate(&self, from: f64, to: f64, x: &[f64]) -> Vec<f64> {
        let span = to - from;
        if span == 0.0 {
            return x.to_vec();
        }
        let steps = (span.abs() / self.step).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let mut y = DVector::from_column_slice(x);
        for i in 0..steps {
            let t = from + i as f64 * h;
            let a0 = self.matrix_at(t);
            let am = self.matrix_at(t + 0.5 * h);
            let a1 = self.matrix_at(t + h);
            let k1 = &a0 * &y;
            let k2 = &am * (&y + &k1 * (0.5 * h));
            let k3 = &am * (&y + &k2 * (0.5 * h));
            let k4 = &a1 * (&y + &k3 * h);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        y.as_slice().to_vec()
    }
}

impl DichotomyFamily for MatrixFamily {
    fn dim(&self) -> usize {
        self.stable.len()
    }

    fn norm(&self) -> &Norm {
        &self.norm
    }

    fn constants(&self) -> DichotomyConstants {
        self.constants
    }

    fn apply(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64> {
        assert!(t >= s, "U(t,s) needs t >= s (t = {t}, s = {s})");
        self.propagate(s, t, x)
    }

    fn project_stable(&self, _t: f64, x: &[f64]) -> Vec<f64> {
        self.stable
            .iter()
            .zip(x)
            .map(|(&st, &v)| if st { v } else { 0.0 })
            .collect()
    }

    fn apply_inverse_unstable(&self, t: f64, s: f64, x: &[f64]) -> Vec<f64> {
        assert!(s >= t, "Ũ(t,s) needs s >= t (t = {t}, s = {s})");
        let q: Vec<f64> = self
            .stable
            .iter()
            .zip(x)
            .map(|(&st, &v)| if st { 0.0 } else { v })
            .collect();
        // backward in time the unstable block decays, so this is well conditioned
        self.propagate(s, t, &q)
    }

    fn is_exponentially_stable(&self) -> bool {
        self.stable.iter().all(|&s| s)
    }
}

/// `diag(e^{λᵢ(t−s)})` behind the family interface.
pub fn make_diagonal_family(rates: Vec<f64>) -> Result<Arc<dyn DichotomyFamily>> {
    Ok(Arc::new(DiagonalFamily::new(rates)?))
}

/// `e^{∫_s^t α}` on the scalar line, validated on `probe`.
pub fn make_scalar_timevarying_family(
    alpha: TimeSignal,
    omega: f64,
    probe: &WindowGrid,
) -> Result<Arc<dyn DichotomyFamily>> {
    Ok(Arc::new(ScalarAlphaFamily::new(alpha, omega, probe, 1)?))
}

pub fn green_apply(green: &GreenFunction, t: f64, s: f64, x: &[f64]) -> Vec<f64> {
    green.apply(t, s, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn diagonal_examples() {
        let fam = DiagonalFamily::new(vec![-1.0, 1.0]).unwrap();
        let u = fam.apply(1.0, 0.0, &[1.0, 1.0]);
        assert!((u[0] - 1.0 / E).abs() < 1e-15 && (u[1] - E).abs() < 1e-15);
        for t in [-3.0, 0.0, 8.0] {
            assert_eq!(fam.project_stable(t, &[3.0, 4.0]), vec![3.0, 0.0]);
        }
        assert!(matches!(
            DiagonalFamily::new(vec![-1.0, 0.0]),
            Err(Error::NonHyperbolic { index: 1 })
        ));
    }

    #[test]
    fn exponentially_stable_diagonal() {
        let fam = Arc::new(DiagonalFamily::new(vec![-2.0, -5.0]).unwrap());
        assert_eq!(fam.constants().rate, 2.0);
        assert_eq!(fam.project_stable(0.0, &[1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(fam.project_unstable(0.0, &[1.0, 2.0]), vec![0.0, 0.0]);
        let g = GreenFunction::new(fam.clone());
        assert_eq!(g.apply(0.0, 1.0, &[1.0, 1.0]), vec![0.0, 0.0]);
        assert_eq!(g.apply(1.0, 0.0, &[1.0, 1.0]), fam.apply(1.0, 0.0, &[1.0, 1.0]));
    }

    #[test]
    fn green_branches_and_sign() {
        let g = GreenFunction::new(Arc::new(DiagonalFamily::new(vec![-1.0, 1.0]).unwrap()));
        let stable = g.apply(1.0, 0.0, &[1.0, 1.0]);
        assert!((stable[0] - 1.0 / E).abs() < 1e-15);
        assert_eq!(stable[1], 0.0);
        let unstable = g.apply(0.0, 1.0, &[1.0, 1.0]);
        assert_eq!(unstable[0], 0.0);
        assert!((unstable[1] + 1.0 / E).abs() < 1e-15);
        // diagonal belongs to the stable branch
        assert_eq!(g.apply(2.0, 2.0, &[5.0, 7.0]), vec![5.0, 0.0]);
    }

    #[test]
    fn scalar_alpha_examples() {
        let fam = ScalarAlphaFamily::constant_rate(1.0).unwrap();
        assert!((fam.apply(2.0, 0.0, &[1.0])[0] - (-2.0f64).exp()).abs() < 1e-15);

        let probe = WindowGrid::new(-20.0, 20.0, 0.01).unwrap();
        let fam = ScalarAlphaFamily::new(TimeSignal::scalar(|t: f64| -2.0 + t.sin()), 1.0, &probe, 1).unwrap();
        let v = fam.apply(2.0 * PI, 0.0, &[1.0])[0];
        assert!((v - (-4.0 * PI).exp()).abs() < 1e-10);
        assert!((fam.exponent(2.0 * PI, 0.0) + 4.0 * PI).abs() < 1e-10);

        let err = ScalarAlphaFamily::new(TimeSignal::scalar(|t: f64| -2.0 + t.sin()), 1.5, &probe, 1);
        assert!(matches!(err, Err(Error::HypothesisViolation { .. })));
    }

    #[test]
    fn coefficient_integral_is_additive_and_signed() {
        let ci = CoefficientIntegral::new(TimeSignal::scalar(|t: f64| 2.5 + t.sin() + 0.4 * (2f64.sqrt() * t).sin()));
        let (s, r, t) = (-3.7, 1.2, 9.9);
        let lhs = ci.integrate(s, t);
        assert!((lhs - ci.integrate(s, r) - ci.integrate(r, t)).abs() < 1e-9);
        assert_eq!(ci.integrate(t, s), -lhs);
        let exact = 2.5 * (t - s) - (t.cos() - s.cos())
            - 0.4 / 2f64.sqrt() * ((2f64.sqrt() * t).cos() - (2f64.sqrt() * s).cos());
        assert!((lhs - exact).abs() < 1e-9);
    }

    #[test]
    fn matrix_family_matches_closed_form_for_commuting_case() {
        let probe = WindowGrid::new(-5.0, 5.0, 0.5).unwrap();
        let fam = MatrixFamily::new(
            vec![true, false],
            DichotomyConstants::new(1.0, 1.0).unwrap(),
            DEFAULT_PROPAGATOR_STEP,
            &probe,
            |t: f64| DMatrix::from_row_slice(2, 2, &[-2.0 + t.sin(), 0.0, 0.0, 1.5 + 0.5 * t.cos()]),
        )
        .unwrap();
        let (t, s) = (2.3, -1.1);
        let u = fam.apply(t, s, &[1.0, 1.0]);
        let e0 = (-2.0 * (t - s) - (t.cos() - s.cos())).exp();
        let e1 = (1.5 * (t - s) + 0.5 * (t.sin() - s.sin())).exp();
        assert!((u[0] - e0).abs() < 1e-10, "{} vs {e0}", u[0]);
        assert!((u[1] - e1).abs() / e1 < 1e-10);
        let back = fam.apply_inverse_unstable(s, t, &[3.0, 1.0]);
        assert_eq!(back[0], 0.0);
        assert!((back[1] - 1.0 / e1).abs() < 1e-10);
    }

    #[test]
    fn matrix_family_rejects_coupled_blocks() {
        let probe = WindowGrid::new(0.0, 1.0, 0.5).unwrap();
        let r = MatrixFamily::new(
            vec![true, false],
            DichotomyConstants::new(1.0, 1.0).unwrap(),
            DEFAULT_PROPAGATOR_STEP,
            &probe,
            |t: f64| DMatrix::from_row_slice(2, 2, &[-1.0, t, 0.0, 1.0]),
        );
        assert!(matches!(r, Err(Error::HypothesisViolation { .. })));
    }

    #[test]
    fn constants_validation() {
        assert!(DichotomyConstants::new(0.5, 1.0).is_err());
        assert!(DichotomyConstants::new(1.0, 0.0).is_err());
        let c = DichotomyConstants::new(2.0, 0.5).unwrap();
        assert!((c.envelope(-2.0) - 2.0 / E).abs() < 1e-15);
    }
}
