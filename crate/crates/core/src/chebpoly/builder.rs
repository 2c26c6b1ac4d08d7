use super::erf_kernel::erf_sign_approx;
use super::remez::{global_max, odd_unit_minimax};
use super::{clenshaw, verify_bounds, ChebPoly, StepSpec};
use crate::error::{domain, Error, Result};

/// How odd sign approximations of degree >= 3 are constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Construction {
    /// Best odd approximation on `[delta, 1]` by exchange iteration; falls
    /// back to the erf kernel if the iteration fails to converge.
    #[default]
    Exchange,
    /// Truncated Chebyshev series of `erf(k x)` with `k` tuned per degree.
    ErfKernel,
}

const ETA_BISECTION_TOL: f64 = 1e-6;

/// Normalizes an odd sign approximation to `sup |S| = 1 - 1e-12` on
/// `[-1, 1]` and returns it with the achieved `eta = 1 - min_{[delta,1]} S`.
pub(crate) fn normalize_odd(mut coeffs: Vec<f64>, delta: f64) -> (Vec<f64>, f64) {
    let samples = 25 * coeffs.len() + 2000;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let sup = global_max(|t| clenshaw(&coeffs, t.cos()).abs(), 0.0, half_pi, samples);
    if !(sup > 0.0) || !sup.is_finite() {
        return (coeffs, 1.0);
    }
    let scale = (1.0 - 1e-12) / sup;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    let min_right = -global_max(|t| -clenshaw(&coeffs, t.cos()), 0.0, delta.acos(), samples);
    (coeffs, 1.0 - min_right)
}

/// `P = (1 + S) / 2`.
fn step_from_sign(mut sign_coeffs: Vec<f64>) -> ChebPoly {
    sign_coeffs.iter_mut().for_each(|c| *c *= 0.5);
    sign_coeffs[0] += 0.5;
    ChebPoly::new(sign_coeffs).expect("finite coefficients")
}

/// The step polynomial of the given odd degree, independent of `eta`.
fn candidate(delta: f64, degree: usize, construction: Construction) -> ChebPoly {
    if degree == 1 {
        return ChebPoly::linear_step();
    }
    let sign = match construction {
        Construction::Exchange => match odd_unit_minimax(delta, degree) {
            Ok(sol) => normalize_odd(sol.coeffs, delta).0,
            Err(_) => erf_sign_approx(delta, degree).0,
        },
        Construction::ErfKernel => erf_sign_approx(delta, degree).0,
    };
    step_from_sign(sign)
}

/// Minimal-degree step approximation for `spec` using the default
/// construction.
pub fn build_step_approx(spec: &StepSpec, max_degree: usize) -> Result<ChebPoly> {
    build_step_approx_with(spec, max_degree, Construction::Exchange)
}

/// Searches degree 1 and the odd degrees `3, 5, ...` up to `max_degree` and
/// returns the first one whose polynomial passes [`verify_bounds`].
///
/// Achievable `eta` is non-increasing in the degree, so the search gallops
/// and then bisects over odd degrees; the result is the same degree a linear
/// scan would accept.
pub fn build_step_approx_with(
    spec: &StepSpec,
    max_degree: usize,
    construction: Construction,
) -> Result<ChebPoly> {
    if max_degree < 1 {
        return domain("max_degree must be at least 1");
    }
    let delta = spec.delta();
    let linear = ChebPoly::linear_step();
    let linear_report = verify_bounds(&linear, spec);
    if linear_report.passes() {
        return Ok(linear);
    }

    let mut best = (1, linear_report);
    let mut test = |j: usize| -> Option<ChebPoly> {
        let degree = 2 * j + 1;
        let poly = candidate(delta, degree, construction);
        let report = verify_bounds(&poly, spec);
        if report.passes() {
            Some(poly)
        } else {
            if report.worst() < best.1.worst() {
                best = (degree, report);
            }
            None
        }
    };

    // degree = 2j + 1; j = 0 is known to fail
    let j_max = (max_degree - 1) / 2;
    let mut lo = 0;
    let mut hi = None;
    let mut j = 1;
    while j <= j_max {
        if let Some(poly) = test(j) {
            hi = Some((j, poly));
            break;
        }
        lo = j;
        if j == j_max {
            break;
        }
        j = (2 * j).min(j_max);
    }
    let Some((mut hi_j, mut hi_poly)) = hi else {
        return Err(Error::Capacity {
            max_degree,
            best_degree: best.0,
            best_report: best.1,
        });
    };
    while hi_j - lo > 1 {
        let mid = lo + (hi_j - lo) / 2;
        match test(mid) {
            Some(poly) => {
                hi_j = mid;
                hi_poly = poly;
            }
            None => lo = mid,
        }
    }
    Ok(hi_poly)
}

/// Smallest `eta` for which [`build_step_approx`] succeeds with degree at
/// most `degree`, found by bisection to within `1e-6`.
pub fn min_eta_for_degree(delta: f64, degree: usize) -> Result<f64> {
    if degree < 1 {
        return domain("degree must be at least 1");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("delta must lie in (0, 1), got {delta}"));
    }
    // highest degree first: it is the one most likely to pass
    let candidates: Vec<ChebPoly> = (0..=(degree - 1) / 2)
        .rev()
        .map(|j| candidate(delta, 2 * j + 1, Construction::Exchange))
        .collect();
    let feasible = |eta: f64| {
        let spec = StepSpec::new(delta, eta).expect("eta inside (0, 1)");
        candidates.iter().any(|p| verify_bounds(p, &spec).passes())
    };

    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > ETA_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Empirical constant `C` in `d = C (1/delta) ln(4/eta)`.
pub fn degree_constant(delta: f64, eta: f64, degree: usize) -> f64 {
    degree as f64 * delta / (4.0 / eta).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebpoly::Parity;

    #[test]
    fn degree_one_short_circuit() {
        let spec = StepSpec::new(0.2, 0.9).unwrap();
        let p = build_step_approx(&spec, 101).unwrap();
        assert_eq!(p.degree(), 1);
        assert_eq!(p, ChebPoly::linear_step());
        assert_eq!(p.parity(), Parity::None);
    }

    #[test]
    fn capacity_error_carries_best_report() {
        let spec = StepSpec::new(0.05, 0.01).unwrap();
        match build_step_approx(&spec, 9) {
            Err(Error::Capacity {
                max_degree,
                best_degree,
                best_report,
            }) => {
                assert_eq!(max_degree, 9);
                assert_eq!(best_degree, 9);
                assert!(!best_report.passes());
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn zero_max_degree_rejected() {
        let spec = StepSpec::new(0.2, 0.5).unwrap();
        assert!(matches!(build_step_approx(&spec, 0), Err(Error::Domain(_))));
        assert!(min_eta_for_degree(0.2, 0).is_err());
    }

    #[test]
    fn builder_returns_minimal_degree() {
        let spec = StepSpec::new(0.1, 0.1).unwrap();
        let p = build_step_approx(&spec, 301).unwrap();
        let d = p.degree();
        assert!(verify_bounds(&p, &spec).passes());
        assert!(!verify_bounds(&candidate(0.1, d - 2, Construction::Exchange), &spec).passes());
    }

    #[test]
    fn erf_kernel_never_beats_exchange() {
        let spec = StepSpec::new(0.1, 0.1).unwrap();
        let exchange = build_step_approx(&spec, 301).unwrap();
        let erf = build_step_approx_with(&spec, 301, Construction::ErfKernel).unwrap();
        assert!(verify_bounds(&erf, &spec).passes());
        assert!(erf.degree() >= exchange.degree());
    }

    #[test]
    fn frontier_at_degree_one_is_one_minus_delta() {
        let eta = min_eta_for_degree(0.2, 1).unwrap();
        assert!((eta - 0.8).abs() <= 1e-4);
    }
}
