//! Simultaneous near-periods of two periodic components via continued fractions.
//!
//! For periods `P₁`, `P₂`, a shift `τ = q·P₁` is a near-period of both when
//! `q·P₁/P₂` is close to an integer. The best such `q` are the denominators of
//! the continued-fraction convergents of `P₁/P₂`.

use crate::error::{Error, Result};

/// Convergents `p_k/q_k` of a positive real, in order of increasing denominator.
pub fn convergents(x: f64, max_terms: usize) -> Vec<(u64, u64)> {
    let mut out = Vec::with_capacity(max_terms);
    let (mut p_prev, mut p) = (1u64, x.floor() as u64);
    let (mut q_prev, mut q) = (0u64, 1u64);
    out.push((p, q));
    let mut frac = x - x.floor();
    while out.len() < max_terms && frac > 1e-12 {
        let y = 1.0 / frac;
        let a = y.floor();
        frac = y - a;
        let a = a as u64;
        let (Some(np), Some(nq)) = (
            a.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) else {
            break;
        };
        p_prev = p;
        q_prev = q;
        p = np;
        q = nq;
        out.push((p, q));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearPeriod {
    pub tau: f64,
    /// Number of `P₁` periods in `tau`.
    pub cycles_first: u64,
    /// Nearest whole number of `P₂` periods in `tau`.
    pub cycles_second: u64,
    /// Phase error of the second component, `|τ/P₂ − cycles_second|`.
    pub phase_error: f64,
}

/// Smallest convergent shift `τ = q·P₁ ≥ min_tau` that is simultaneously close
/// to a multiple of `P₂`.
pub fn near_common_period(p1: f64, p2: f64, min_tau: f64) -> Result<NearPeriod> {
    if !(p1 > 0.0 && p2 > 0.0 && p1.is_finite() && p2.is_finite()) {
        return Err(Error::invalid("periods must be positive and finite"));
    }
    let ratio = p1 / p2;
    for (_, q) in convergents(ratio, 64) {
        let tau = q as f64 * p1;
        if tau < min_tau {
            continue;
        }
        let cycles = tau / p2;
        let nearest = cycles.round();
        return Ok(NearPeriod {
            tau,
            cycles_first: q,
            cycles_second: nearest as u64,
            phase_error: (cycles - nearest).abs(),
        });
    }
    Err(Error::invalid(format!(
        "no convergent shift of at least {min_tau} found for periods ({p1}, {p2})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sqrt2_convergents() {
        let c = convergents(2f64.sqrt(), 8);
        assert_eq!(
            c,
            vec![(1, 1), (3, 2), (7, 5), (17, 12), (41, 29), (99, 70), (239, 169), (577, 408)]
        );
    }

    #[test]
    fn rational_terminates() {
        assert_eq!(convergents(2.5, 10), vec![(2, 1), (5, 2)]);
    }

    #[test]
    fn near_period_of_incommensurate_cosines() {
        let np = near_common_period(2.0 * PI, 2.0 * PI / 2f64.sqrt(), 2000.0).unwrap();
        assert_eq!(np.cycles_first, 408);
        assert_eq!(np.cycles_second, 577);
        assert!(np.phase_error < 1e-3);
        assert!((np.tau - 816.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn phase_errors_shrink_along_convergents() {
        let p2 = 2.0 * PI / 2f64.sqrt();
        let errs: Vec<f64> = [10.0, 100.0, 1000.0, 10000.0]
            .iter()
            .map(|&m| near_common_period(2.0 * PI, p2, m).unwrap().phase_error)
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
    }
}
