//! Exchange (Remez) solver for the best odd approximation of the constant 1
//! on `[delta, 1]`.
//!
//! The error curve of the optimum equioscillates on `(d + 1)/2 + 1` points of
//! `[delta, 1]`, both endpoints included, so the optimum is monotone on
//! `[0, delta]` and bounded there by its value at `delta`. Dividing it by its
//! supremum gives an odd polynomial `S` with `|S| <= 1` on `[-1, 1]` and
//! `S >= 1 - eta` on `[delta, 1]` for the smallest `eta` any odd polynomial
//! of that degree can reach.
//!
//! All searches run in the angle variable `x = cos(theta)`, where Chebyshev
//! ripples are close to uniformly spaced.

use nalgebra::{DMatrix, DVector};

use super::clenshaw;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const CONVERGED_GAP: f64 = 1e-10;
const ACCEPTABLE_GAP: f64 = 1e-6;
const NEGLIGIBLE_ERROR: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct OddMinimax {
    /// Full Chebyshev coefficient vector (even entries are zero).
    pub coeffs: Vec<f64>,
    /// Sup-norm of `S - 1` on `[delta, 1]`.
    pub level: f64,
}

pub(crate) fn odd_unit_minimax(delta: f64, degree: usize) -> Result<OddMinimax> {
    debug_assert!(degree % 2 == 1);
    let n = degree.div_ceil(2);
    let theta_max = delta.acos();
    let samples = (50 * n).max(2000);

    // Chebyshev extrema in y = x^2, where odd polynomials in x become
    // polynomials in y.
    let d2 = delta * delta;
    let mut reference: Vec<f64> = (0..=n)
        .map(|i| {
            let y = 0.5 * (1.0 + d2)
                + 0.5 * (1.0 - d2) * (std::f64::consts::PI * i as f64 / n as f64).cos();
            y.clamp(d2, 1.0).sqrt().acos()
        })
        .collect();

    let mut best: Option<(OddMinimax, f64)> = None;
    for _ in 0..MAX_ITERATIONS {
        let coeffs = solve_reference(&reference, n, degree)?;
        let error = |theta: f64| clenshaw(&coeffs, theta.cos()) - 1.0;
        let extrema = signed_extrema(&error, theta_max, samples);
        let max_err = extrema.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
        let next = select_alternating(extrema, n + 1)?;
        let min_err = next.iter().map(|e| e.1.abs()).fold(f64::INFINITY, f64::min);
        let gap = (max_err - min_err) / max_err;

        let candidate = OddMinimax {
            coeffs,
            level: max_err,
        };
        if gap <= CONVERGED_GAP || max_err <= NEGLIGIBLE_ERROR {
            return Ok(candidate);
        }
        if best.as_ref().is_none_or(|(b, _)| candidate.level < b.level) {
            best = Some((candidate, gap));
        }
        reference = next.into_iter().map(|e| e.0).collect();
    }
    match best {
        Some((sol, gap)) if gap <= ACCEPTABLE_GAP => Ok(sol),
        _ => Err(Error::Construction(format!(
            "exchange iteration did not converge at degree {degree}, delta {delta}"
        ))),
    }
}

/// Solves `sum_j a_j T_{2j+1}(x_i) + (-1)^i h = 1` on the reference angles.
fn solve_reference(reference: &[f64], n: usize, degree: usize) -> Result<Vec<f64>> {
    let m = n + 1;
    let system = DMatrix::from_fn(m, m, |i, j| {
        if j < n {
            ((2 * j + 1) as f64 * reference[i]).cos()
        } else if i % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    });
    let rhs = DVector::from_element(m, 1.0);
    let solution = system
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Construction("singular exchange system".into()))?;
    let mut coeffs = vec![0.0; degree + 1];
    for j in 0..n {
        coeffs[2 * j + 1] = solution[j];
    }
    Ok(coeffs)
}

/// One extremum per maximal run of constant sign of `f` on `[0, hi]`,
/// refined by golden-section search. Consecutive entries alternate in sign.
fn signed_extrema(f: &impl Fn(f64) -> f64, hi: f64, samples: usize) -> Vec<(f64, f64)> {
    let step = hi / samples as f64;
    let values: Vec<f64> = (0..=samples).map(|i| f(i as f64 * step)).collect();

    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut run_best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match run_best {
            Some(b) if values[b].signum() == v.signum() || v == 0.0 => {
                if v.abs() > values[b].abs() {
                    run_best = Some(i);
                }
            }
            Some(b) => {
                out.push(refine(f, &values, b, step, samples));
                run_best = Some(i);
            }
            None => run_best = Some(i),
        }
    }
    if let Some(b) = run_best {
        out.push(refine(f, &values, b, step, samples));
    }
    out
}

fn refine(
    f: &impl Fn(f64) -> f64,
    values: &[f64],
    idx: usize,
    step: f64,
    samples: usize,
) -> (f64, f64) {
    let theta = idx as f64 * step;
    if idx == 0 || idx == samples {
        return (theta, values[idx]);
    }
    let sign = values[idx].signum();
    let t = golden_max(|t| sign * f(t), theta - step, theta + step);
    let v = f(t);
    if sign * v >= sign * values[idx] {
        (t, v)
    } else {
        (theta, values[idx])
    }
}

/// Maximizer of a unimodal function on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Keeps `m` alternating extrema, dropping the smallest first.
fn select_alternating(mut ext: Vec<(f64, f64)>, m: usize) -> Result<Vec<(f64, f64)>> {
    if ext.len() < m {
        return Err(Error::Construction(format!(
            "only {} alternation points, need {m}",
            ext.len()
        )));
    }
    while ext.len() > m {
        if ext.len() - m == 1 {
            if ext[0].1.abs() < ext[ext.len() - 1].1.abs() {
                ext.remove(0);
            } else {
                ext.pop();
            }
            continue;
        }
        let i = (0..ext.len())
            .min_by(|&a, &b| ext[a].1.abs().total_cmp(&ext[b].1.abs()))
            .expect("non-empty");
        ext.remove(i);
        if i > 0 && i < ext.len() && ext[i - 1].1.signum() == ext[i].1.signum() {
            if ext[i - 1].1.abs() < ext[i].1.abs() {
                ext.remove(i - 1);
            } else {
                ext.remove(i);
            }
        }
    }
    Ok(ext)
}

/// Global maximum of `f` on `[lo, hi]`: dense sampling, then golden-section
/// refinement around every sampled local maximum.
pub(crate) fn global_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> f64 {
    let step = (hi - lo) / samples as f64;
    let values: Vec<f64> = (0..=samples).map(|i| f(lo + i as f64 * step)).collect();
    let mut best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for i in 1..samples {
        if values[i] >= values[i - 1] && values[i] >= values[i + 1] {
            let c = lo + i as f64 * step;
            let t = golden_max(&f, c - step, c + step);
            best = best.max(f(t));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_is_the_scaled_identity() {
        // min |a x - 1| on [delta, 1] is attained at a = 2/(1 + delta)
        let delta = 0.2;
        let sol = odd_unit_minimax(delta, 1).unwrap();
        assert!((sol.coeffs[1] - 2.0 / (1.0 + delta)).abs() < 1e-12);
        assert!((sol.level - (1.0 - delta) / (1.0 + delta)).abs() < 1e-12);
    }

    #[test]
    fn error_equioscillates() {
        let (delta, degree) = (0.1, 15);
        let sol = odd_unit_minimax(delta, degree).unwrap();
        let error = |t: f64| clenshaw(&sol.coeffs, t.cos()) - 1.0;
        let ext = signed_extrema(&error, delta.acos(), 4000);
        assert!(ext.len() > degree.div_ceil(2));
        for e in &ext {
            assert!((e.1.abs() - sol.level).abs() < 1e-8 * sol.level.max(1e-3));
        }
    }

    #[test]
    fn level_decreases_with_degree() {
        let levels: Vec<f64> = [1, 3, 5, 9, 17]
            .iter()
            .map(|&d| odd_unit_minimax(0.2, d).unwrap().level)
            .collect();
        assert!(levels.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn golden_max_finds_parabola_peak() {
        let t = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0);
        assert!((t - 0.3).abs() < 1e-8);
    }
}
