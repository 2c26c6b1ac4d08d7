//! Chebyshev-basis polynomials and certified approximations to the step
//! function.
//!
//! A step approximation for `(delta, eta)` is a polynomial `P` with
//! `0 <= P <= eta/2` on `[-1, -delta]`, `1 - eta/2 <= P <= 1` on `[delta, 1]`
//! and `|P| <= 1` everywhere on `[-1, 1]`. Nothing is required inside the gap
//! `(-delta, delta)`.
//!
//! Certification is done on a dense grid rather than symbolically: see
//! [`verify_bounds`].

mod builder;
mod erf_kernel;
mod remez;

use std::fmt;

use crate::error::{domain, Result};

pub(crate) use builder::normalize_odd;
pub use builder::{
    build_step_approx, build_step_approx_with, degree_constant, min_eta_for_degree, Construction,
};

/// Tolerance used by every bound certificate.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Minimum number of uniform grid points used by certification.
pub const CERT_GRID: usize = 10_000;

/// Parity flag of a polynomial in the Chebyshev basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::None => "none",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Parity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            "none" => Ok(Parity::None),
            other => Err(format!("unknown parity `{other}`")),
        }
    }
}

/// A real polynomial `sum_k c_k T_k(x)` in the Chebyshev basis of the first
/// kind.
///
/// Trailing zero coefficients are trimmed on construction so that `c_d != 0`
/// unless the polynomial is the constant zero. The parity flag is derived from
/// the exact zero pattern of the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebPoly {
    coeffs: Vec<f64>,
    parity: Parity,
}

impl ChebPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return domain("Chebyshev coefficients must be finite");
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        let parity = detect_parity(&coeffs);
        Ok(Self { coeffs, parity })
    }

    /// `(1 + x) / 2`, the degree-one step.
    pub fn linear_step() -> Self {
        Self::new(vec![0.5, 0.5]).expect("finite coefficients")
    }

    /// Single basis polynomial `T_k`.
    pub fn chebyshev_t(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Self::new(coeffs).expect("finite coefficients")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Evaluates the polynomial at `x in [-1, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&x) {
            return domain(format!("evaluation point {x} lies outside [-1, 1]"));
        }
        Ok(clenshaw(&self.coeffs, x))
    }

    /// Evaluation without the domain check, for grids known to lie in `[-1, 1]`.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, x)
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: f64, other: &ChebPoly, b: f64) -> Result<ChebPoly> {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| {
                a * self.coeffs.get(k).copied().unwrap_or(0.0)
                    + b * other.coeffs.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        ChebPoly::new(coeffs)
    }

    /// Largest `|P(x)|` over the certification grid.
    pub fn sup_norm(&self) -> f64 {
        certification_grid(self.degree(), &[])
            .into_iter()
            .map(|x| self.eval_unchecked(x).abs())
            .fold(0.0, f64::max)
    }

    /// Whether `|P| <= 1 + BOUND_TOLERANCE` on the certification grid.
    pub fn is_bounded(&self) -> bool {
        self.sup_norm() <= 1.0 + BOUND_TOLERANCE
    }
}

fn detect_parity(coeffs: &[f64]) -> Parity {
    let odd_zero = coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0);
    let even_zero = coeffs.iter().step_by(2).all(|&c| c == 0.0);
    if odd_zero {
        Parity::Even
    } else if even_zero {
        Parity::Odd
    } else {
        Parity::None
    }
}

/// Clenshaw backward recurrence for `sum_k c_k T_k(x)`.
pub(crate) fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let n = coeffs.len();
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return coeffs[0];
    }
    let two_x = 2.0 * x;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs[1..].iter().rev() {
        let b0 = two_x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + coeffs[0]
}

/// Approximation parameters of a step polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSpec {
    delta: f64,
    eta: f64,
}

impl StepSpec {
    pub fn new(delta: f64, eta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("delta must lie in (0, 1), got {delta}"));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return domain(format!("eta must lie in (0, 1), got {eta}"));
        }
        Ok(Self { delta, eta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Grid certificate for the step bounds.
///
/// Each violation is the worst signed amount by which a bound is exceeded;
/// negative values mean the bound holds with that much slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Worst violation of `0 <= P <= eta/2` on `[-1, -delta]`.
    pub max_low_violation: f64,
    /// Worst violation of `1 - eta/2 <= P <= 1` on `[delta, 1]`.
    pub max_high_violation: f64,
    /// Worst `|P| - 1` on `[-1, 1]`.
    pub max_abs_excess: f64,
    pub grid_size: usize,
}

impl BoundReport {
    pub fn passes(&self) -> bool {
        self.max_low_violation <= BOUND_TOLERANCE
            && self.max_high_violation <= BOUND_TOLERANCE
            && self.max_abs_excess <= BOUND_TOLERANCE
    }

    /// Largest of the three violations.
    pub fn worst(&self) -> f64 {
        self.max_low_violation
            .max(self.max_high_violation)
            .max(self.max_abs_excess)
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "low {:.3e}, high {:.3e}, abs {:.3e} over {} points ({})",
            self.max_low_violation,
            self.max_high_violation,
            self.max_abs_excess,
            self.grid_size,
            if self.passes() { "pass" } else { "fail" }
        )
    }
}

/// Certification grid: `CERT_GRID` uniform points on `[-1, 1]`, a cosine
/// grid fine enough to resolve the ripples of a degree-`degree` polynomial
/// near the endpoints, and the given extra points.
pub(crate) fn certification_grid(degree: usize, extra: &[f64]) -> Vec<f64> {
    let uniform = CERT_GRID;
    let cosine = 16 * (degree + 1);
    let mut grid = Vec::with_capacity(uniform + cosine + 1 + extra.len());
    grid.extend((0..uniform).map(|i| -1.0 + 2.0 * i as f64 / (uniform - 1) as f64));
    grid.extend((0..=cosine).map(|i| (std::f64::consts::PI * i as f64 / cosine as f64).cos()));
    grid.extend(extra.iter().copied().filter(|x| x.abs() <= 1.0));
    grid
}

/// Evaluates `poly` on the certification grid (which includes `±delta` and
/// `±1`) and reports the worst violation of each step bound.
pub fn verify_bounds(poly: &ChebPoly, spec: &StepSpec) -> BoundReport {
    let (delta, eta) = (spec.delta(), spec.eta());
    let grid = certification_grid(poly.degree(), &[-delta, delta]);
    let mut report = BoundReport {
        max_low_violation: f64::NEG_INFINITY,
        max_high_violation: f64::NEG_INFINITY,
        max_abs_excess: f64::NEG_INFINITY,
        grid_size: grid.len(),
    };
    for &x in &grid {
        let p = poly.eval_unchecked(x);
        report.max_abs_excess = report.max_abs_excess.max(p.abs() - 1.0);
        if x <= -delta {
            let v = (p - eta / 2.0).max(-p);
            report.max_low_violation = report.max_low_violation.max(v);
        } else if x >= delta {
            let v = (1.0 - eta / 2.0 - p).max(p - 1.0);
            report.max_high_violation = report.max_high_violation.max(v);
        }
    }
    report
}
