//! Quadrature, bracketed root finding and golden-section search.

use crate::error::{invalid, Result, WhetError};
use crate::scenario::PowerProfile;

/// Composite Simpson weights for `n` (odd) samples with spacing `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson's rule needs an odd sample count >= 3");
    let mut w = vec![0.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == n - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}

/// Composite Simpson over uniformly spaced samples.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson's rule needs an odd sample count >= 3");
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}

/// Integral of a power profile over its whole grid.
pub fn integrate(profile: &PowerProfile) -> f64 {
    simpson(profile.values(), profile.grid().step())
}

/// Integral of arbitrary samples; rejects non-uniform spacing.
pub fn integrate_samples(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(invalid("samples", "times and values differ in length"));
    }
    let n = times.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(invalid("samples", format!("need an odd count >= 3, got {n}")));
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(h > 0.0) {
        return Err(invalid("samples", "times must be increasing"));
    }
    for i in 1..n {
        let step = times[i] - times[i - 1];
        if (step - h).abs() > 1e-9 * h {
            return Err(WhetError::NonUniformGrid { index: i });
        }
    }
    Ok(simpson(values, h))
}

/// Simpson integral of `f` on `[a, b]` with `n` (odd) samples. `a > b` flips the sign.
pub fn integrate_fn(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = if n.is_multiple_of(2) { n + 1 } else { n.max(3) };
    let h = (b - a) / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|i| f(a + i as f64 * h)).collect();
    simpson(&values, h)
}

/// Bracket for [`solve_monotone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketedRoot {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the root location.
    pub tol: f64,
    pub max_iter: usize,
}

impl BracketedRoot {
    pub fn new(lo: f64, hi: f64, tol: f64) -> Self {
        Self { lo, hi, tol, max_iter: 200 }
    }
}

/// Bisection for a continuous monotone `f` with a sign change on the bracket.
pub fn solve_monotone(f: impl Fn(f64) -> f64, bracket: BracketedRoot) -> Result<f64> {
    let BracketedRoot { mut lo, mut hi, tol, max_iter } = bracket;
    if !(lo < hi) {
        return Err(invalid("bracket", format!("lo = {lo} must be < hi = {hi}")));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(WhetError::NoSignChange { lo, hi, f_lo, f_hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmin, min)`; the endpoints are compared at the end so a
/// minimum sitting on the boundary is still reported exactly.
pub fn minimize_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut guard = 0;
    while (b - a) > tol && guard < 500 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        guard += 1;
    }
    let x = 0.5 * (a + b);
    let mut best = (x, f(x));
    for cand in [(c, fc), (d, fd), (lo, f(lo)), (hi, f(hi))] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// True when the sampled sequence decreases then increases (plateaus allowed).
pub fn is_unimodal(values: &[f64]) -> bool {
    let mut rising = false;
    for w in values.windows(2) {
        if w[1] > w[0] {
            rising = true;
        } else if rising && w[1] < w[0] {
            return false;
        }
    }
    true
}

/// Minimizes `f` on `[lo, hi]`: a coarse sweep locates the basin, then
/// golden-section refines it. Non-unimodal sweeps fall back to a dense scan.
pub fn minimize_with_sweep(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, coarse: usize) -> (f64, f64) {
    let coarse = coarse.max(3);
    let step = (hi - lo) / (coarse - 1) as f64;
    let xs: Vec<f64> = (0..coarse).map(|i| lo + i as f64 * step).collect();
    let mut ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    // infinities at a singular endpoint are fine for the basin search
    for y in ys.iter_mut() {
        if y.is_nan() {
            *y = f64::INFINITY;
        }
    }
    let finite: Vec<f64> = ys.iter().copied().filter(|y| y.is_finite()).collect();
    let (xs, ys, step) = if is_unimodal(&finite) {
        (xs, ys, step)
    } else {
        log::warn!("objective is not unimodal on the {coarse}-point sweep; falling back to dense search");
        let dense = 64 * coarse;
        let step = (hi - lo) / (dense - 1) as f64;
        let xs: Vec<f64> = (0..dense).map(|i| lo + i as f64 * step).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let y = f(x);
                if y.is_nan() {
                    f64::INFINITY
                } else {
                    y
                }
            })
            .collect();
        (xs, ys, step)
    };
    let k = ys.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    let a = (xs[k] - step).max(lo);
    let b = (xs[k] + step).min(hi);
    let (x, y) = minimize_scalar(&f, a, b, tol);
    if ys[k] < y {
        (xs[k], ys[k])
    } else {
        (x, y)
    }
}

/// Neumaier-compensated sum; result does not depend on how the input was produced.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
