//! Quadrature rules shared by the window functionals and the solvers.
//!
//! Composite Simpson is used everywhere a fixed node layout is needed (window
//! integrals, Green's-function windows, ergodic means). Adaptive Simpson backs
//! the coefficient integrals `∫_s^t α` and `∫_s^t δ` of the evolution families.

/// Number of Simpson sub-intervals actually used for a requested count (rounded up to even, at least 2).
pub fn even_intervals(n: usize) -> usize {
    let n = n.max(2);
    n + (n & 1)
}

/// Nodes and weights of the composite Simpson rule on `[a, b]` with `n` sub-intervals.
///
/// `n` is rounded up to an even number. Weights sum to `b - a` up to rounding.
pub fn simpson_rule(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let n = even_intervals(n);
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| {
            let x = if i == n { b } else { a + i as f64 * h };
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (x, c * h / 3.0)
        })
        .collect()
}

/// Composite Simpson integral of a scalar integrand.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = even_intervals(n);
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let x = a + i as f64 * h;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0
}

/// Adaptive Simpson with Richardson correction and absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
