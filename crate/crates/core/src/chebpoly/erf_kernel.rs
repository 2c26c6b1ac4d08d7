//! Sign approximation by a truncated Chebyshev series of `erf(k x)`.
//!
//! The kernel width `k` is chosen per degree to minimize the achieved `eta`
//! after normalizing the truncation to `|S| <= 1`.

use statrs::function::erf::erf;

use super::remez::golden_max;
use super::normalize_odd;

/// Odd Chebyshev coefficients (up to `degree`) of the interpolant of
/// `erf(k x)` at Chebyshev points of the first kind.
pub(crate) fn erf_series(k: f64, degree: usize) -> Vec<f64> {
    let nodes = (4 * (degree + 1)).max((8.0 * k).ceil() as usize + 64).max(256);
    let values: Vec<(f64, f64)> = (0..nodes)
        .map(|i| {
            let theta = std::f64::consts::PI * (i as f64 + 0.5) / nodes as f64;
            (theta, erf(k * theta.cos()))
        })
        .collect();
    let mut coeffs = vec![0.0; degree + 1];
    for j in (1..=degree).step_by(2) {
        let s: f64 = values
            .iter()
            .map(|&(theta, f)| f * (j as f64 * theta).cos())
            .sum();
        coeffs[j] = 2.0 * s / nodes as f64;
    }
    coeffs
}

/// Best normalized erf-kernel sign approximation of the given odd degree,
/// as `(coefficients, achieved eta)`.
pub(crate) fn erf_sign_approx(delta: f64, degree: usize) -> (Vec<f64>, f64) {
    let eta_for = |log_k: f64| normalize_odd(erf_series(log_k.exp(), degree), delta).1;

    let (lo, hi) = (0.5f64.ln(), (4.0 * degree as f64 + 4.0).ln());
    let scan = 40;
    let step = (hi - lo) / scan as f64;
    let best = (0..=scan)
        .map(|i| lo + i as f64 * step)
        .min_by(|a, b| eta_for(*a).total_cmp(&eta_for(*b)))
        .expect("non-empty scan");
    let refined = golden_max(|t| -eta_for(t), best - step, best + step);
    let log_k = if eta_for(refined) < eta_for(best) {
        refined
    } else {
        best
    };
    normalize_odd(erf_series(log_k.exp(), degree), delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebpoly::clenshaw;

    #[test]
    fn series_converges_to_erf() {
        let k = 5.0;
        let coeffs = erf_series(k, 61);
        for i in 0..=50 {
            let x = -1.0 + 2.0 * i as f64 / 50.0;
            assert!((clenshaw(&coeffs, x) - erf(k * x)).abs() < 1e-10);
        }
    }

    #[test]
    fn normalized_kernel_is_bounded_and_odd() {
        let (coeffs, eta) = erf_sign_approx(0.1, 21);
        assert!(eta > 0.0 && eta < 1.0);
        assert!(coeffs.iter().step_by(2).all(|&c| c == 0.0));
        for i in 0..=2000 {
            let x = -1.0 + i as f64 / 1000.0;
            assert!(clenshaw(&coeffs, x).abs() <= 1.0 + 1e-12);
        }
    }
}
