//! Eigenvalue estimation by noisy binary search over step-function
//! block-encodings, with the Hadamard-test and iterative phase estimation
//! baselines.

use crate::blockenc::{apply_poly, right_probability, shift_and_scale, HermitianOp, NORMALIZATION_TOL};
use crate::chebpoly::{build_step_approx, ChebPoly, StepSpec};
use crate::error::{domain, Result};
use crate::linalg::CVector;
use crate::sampler::{bernoulli_trials, stream_id, Outcome, ResourceLedger, RngStream};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Largest polynomial degree the schedule will ask the builder for.
pub const DEFAULT_MAX_DEGREE: usize = 4001;

/// Trials per RNG block inside one decision.
pub const BLOCK_SHOTS: u64 = 1 << 20;

const MAX_BLOCKS: u64 = 1 << 16;

/// Eigenvector residual tolerance for [`EEInstance`].
pub const EIGEN_TOL: f64 = 1e-10;

/// `ceil(v)`, ignoring a relative excess of `1e-9` caused by rounding.
pub(crate) fn tolerant_ceil(v: f64) -> u64 {
    (v - 1e-9 * v.abs()).ceil() as u64
}

/// Smallest `k` with `ratio / 2^k <= 1`, i.e. `ceil(log2(ratio))` computed by
/// exact halving.
pub fn ceil_log2(ratio: f64) -> u32 {
    let mut k = 0;
    let mut r = ratio;
    while r > 1.0 {
        r *= 0.5;
        k += 1;
    }
    k
}

/// Decision threshold on the empirical RIGHT frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    /// `((eta/2)^2 + (1 - eta/2)^2) / 2 = (1 - eta + eta^2/2) / 2`.
    #[default]
    Midpoint,
    /// `(1 - eta + 2 eta^2) / 2`. Lies outside the separating band once
    /// `eta` exceeds about 0.5486.
    Verbatim,
}

impl ThresholdRule {
    pub fn threshold(self, eta: f64) -> f64 {
        match self {
            ThresholdRule::Midpoint => (1.0 - eta + 0.5 * eta * eta) / 2.0,
            ThresholdRule::Verbatim => (1.0 - eta + 2.0 * eta * eta) / 2.0,
        }
    }
}

/// Parameters of one estimation as a function of `alpha`.
#[derive(Debug, Clone)]
pub struct AlphaSchedule {
    pub alpha: f64,
    pub eps: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub n_samples: u64,
    pub iterations: u32,
    pub threshold: f64,
    pub rule: ThresholdRule,
    pub poly: ChebPoly,
}

impl AlphaSchedule {
    pub fn new(alpha: f64, eps: f64, gamma: f64) -> Result<Self> {
        Self::with_options(alpha, eps, gamma, ThresholdRule::default(), DEFAULT_MAX_DEGREE)
    }

    pub fn with_options(
        alpha: f64,
        eps: f64,
        gamma: f64,
        rule: ThresholdRule,
        max_degree: usize,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return domain(format!("alpha must lie in [0, 1], got {alpha}"));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        if !(eps > 0.0) || !(eps < 4.0 * gamma) {
            return domain(format!("eps must lie in (0, 4 gamma) = (0, {}), got {eps}", 4.0 * gamma));
        }
        let delta = eps / (4.0 * gamma);
        let eta = 1.0 - 0.5 * delta.powf(alpha);
        let log_factor = ceil_log2(4.0 * gamma / eps);
        let n_samples = tolerant_ceil(20.0 * (4.0 * gamma / eps).powf(2.0 * alpha) * log_factor as f64);
        let poly = build_step_approx(&StepSpec::new(delta, eta)?, max_degree)?;
        Ok(Self {
            alpha,
            eps,
            gamma,
            delta,
            eta,
            n_samples,
            iterations: ceil_log2(2.0 * gamma / eps),
            threshold: rule.threshold(eta),
            rule,
            poly,
        })
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    /// Whether the threshold separates `(eta/2)^2` from `(1 - eta/2)^2`.
    pub fn threshold_in_band(&self) -> bool {
        let lo = (self.eta / 2.0).powi(2);
        let hi = (1.0 - self.eta / 2.0).powi(2);
        lo < self.threshold && self.threshold < hi
    }

    /// `T = iterations * n_samples * degree`.
    pub fn expected_total_queries(&self) -> u64 {
        self.iterations as u64 * self.n_samples * self.degree() as u64
    }
}

/// `H`, `gamma`, an eigenvector `psi` and its eigenvalue.
#[derive(Debug, Clone)]
pub struct EEInstance {
    pub h: HermitianOp,
    pub gamma: f64,
    pub psi: CVector,
    /// Rayleigh quotient of `psi`; kept for validation only.
    pub true_mu: f64,
}

impl EEInstance {
    pub fn new(h: HermitianOp, gamma: f64, psi: CVector) -> Result<Self> {
        if !(gamma > 0.0) {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        if psi.len() != h.dim() {
            return domain(format!("state has dimension {}, operator {}", psi.len(), h.dim()));
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return domain(format!("state is not normalized (norm {norm})"));
        }
        let spectral = h.spectral_norm();
        if spectral > gamma * (1.0 + 1e-12) {
            return domain(format!("spectral norm {spectral} exceeds gamma {gamma}"));
        }
        let hpsi = h.matrix() * &psi;
        let true_mu = psi.dotc(&hpsi).re;
        let residual = (hpsi - &psi * crate::linalg::c(true_mu, 0.0)).norm();
        if residual > EIGEN_TOL {
            return domain(format!("state is not an eigenvector (residual {residual:.3e})"));
        }
        Ok(Self {
            h,
            gamma,
            psi,
            true_mu,
        })
    }

    /// Uses the eigenvector of the `index`-th smallest eigenvalue.
    pub fn from_eigen_index(h: HermitianOp, gamma: f64, index: usize) -> Result<Self> {
        let (_, vectors) = h.eigen();
        if index >= h.dim() {
            return domain(format!("eigen index {index} out of range for dimension {}", h.dim()));
        }
        let psi = vectors.column(index).into_owned();
        Self::new(h, gamma, psi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchState {
    pub left: f64,
    pub right: f64,
    pub mu0: f64,
}

impl SearchState {
    pub fn new(gamma: f64) -> Self {
        Self::from_bounds(-gamma, gamma)
    }

    fn from_bounds(left: f64, right: f64) -> Self {
        Self {
            left,
            right,
            mu0: 0.5 * (left + right),
        }
    }

    pub fn advance(self, outcome: Outcome) -> Self {
        match outcome {
            Outcome::Right => Self::from_bounds(self.mu0, self.right),
            Outcome::Left => Self::from_bounds(self.left, self.mu0),
        }
    }
}

/// How the RIGHT probability of a decision is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbabilityPath {
    /// `P(x)^2` at the shifted eigenvalue of `psi`.
    #[default]
    Eigenstate,
    /// `||P(H') psi||^2` from the transformed matrix.
    Statevector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub outcome: Outcome,
    pub p_right: f64,
    pub right_count: u64,
}

/// RIGHT probability of the decision circuit centred at `mu0`.
pub fn right_probability_at(
    inst: &EEInstance,
    mu0: f64,
    sched: &AlphaSchedule,
    path: ProbabilityPath,
) -> Result<f64> {
    if !(mu0.abs() <= sched.gamma) {
        return domain(format!("|mu0| = {} exceeds gamma {}", mu0.abs(), sched.gamma));
    }
    match path {
        ProbabilityPath::Eigenstate => {
            let x = ((inst.true_mu - mu0) / (sched.gamma + mu0.abs())).clamp(-1.0, 1.0);
            Ok(sched.poly.eval(x)?.powi(2).clamp(0.0, 1.0))
        }
        ProbabilityPath::Statevector => {
            let hp = shift_and_scale(&inst.h, mu0, sched.gamma)?;
            let transformed = apply_poly(&hp, &sched.poly)?;
            right_probability(&transformed, &inst.psi)
        }
    }
}

/// `count` successes out of `n` trials, drawn in blocks on the streams of
/// binary-search step `step`.
fn blocked_trials(p: f64, n: u64, seed: u64, step: u64) -> Result<u64> {
    let blocks = n.div_ceil(BLOCK_SHOTS);
    if blocks > MAX_BLOCKS {
        return domain(format!("{n} trials exceed the per-step stream capacity"));
    }
    let counts: Result<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let size = BLOCK_SHOTS.min(n - b * BLOCK_SHOTS);
            let mut rng = RngStream::new(seed, stream_id(step, b));
            bernoulli_trials(p, size, &mut rng)
        })
        .collect();
    Ok(counts?.into_iter().sum())
}

/// One LEFT/RIGHT decision: `n_samples` trials, RIGHT iff the empirical
/// frequency exceeds the schedule threshold. Records the shots in `ledger`.
pub fn decide_ee(
    inst: &EEInstance,
    mu0: f64,
    sched: &AlphaSchedule,
    seed: u64,
    step: u64,
    path: ProbabilityPath,
    ledger: &mut ResourceLedger,
) -> Result<Decision> {
    let p_right = right_probability_at(inst, mu0, sched, path)?;
    let right_count = blocked_trials(p_right, sched.n_samples, seed, step)?;
    *ledger = ledger.record_shots(sched.degree() as u64, sched.n_samples)?;
    let p_bar = right_count as f64 / sched.n_samples as f64;
    let outcome = if p_bar > sched.threshold {
        Outcome::Right
    } else {
        Outcome::Left
    };
    Ok(Decision {
        outcome,
        p_right,
        right_count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mu_hat: f64,
    pub ledger: ResourceLedger,
    pub iterations: u32,
}

/// Binary search for the eigenvalue of `inst.psi` to precision `eps`.
pub fn estimate_ee(inst: &EEInstance, eps: f64, alpha: f64, seed: u64) -> Result<Estimate> {
    let sched = AlphaSchedule::new(alpha, eps, inst.gamma)?;
    estimate_ee_with_schedule(inst, &sched, seed, ProbabilityPath::Eigenstate)
}

pub fn estimate_ee_with_schedule(
    inst: &EEInstance,
    sched: &AlphaSchedule,
    seed: u64,
    path: ProbabilityPath,
) -> Result<Estimate> {
    if inst.gamma != sched.gamma {
        return domain(format!(
            "instance gamma {} differs from schedule gamma {}",
            inst.gamma, sched.gamma
        ));
    }
    let mut ledger = ResourceLedger::new();
    let mut state = SearchState::new(sched.gamma);
    let mut mu_hat = state.mu0;
    for step in 0..sched.iterations {
        mu_hat = state.mu0;
        let decision = decide_ee(inst, state.mu0, sched, seed, step as u64, path, &mut ledger)?;
        state = state.advance(decision.outcome);
    }
    Ok(Estimate {
        mu_hat,
        ledger,
        iterations: sched.iterations,
    })
}

/// Depth-1 estimate of a Bernoulli bias from `ceil(1/eps^2)` shots.
pub fn hadamard_test_baseline(p: f64, eps: f64, seed: u64) -> Result<(f64, ResourceLedger)> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("eps must lie in (0, 1), got {eps}"));
    }
    let n = tolerant_ceil(1.0 / (eps * eps));
    let mut rng = RngStream::new(seed, 0);
    let count = bernoulli_trials(p, n, &mut rng)?;
    let ledger = ResourceLedger::new().record_shots(1, n)?;
    Ok((count as f64 / n as f64, ledger))
}

/// Controlled-power exponent and phase correction of one IPE step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpeStep {
    pub m_power: u64,
    pub theta: f64,
}

impl IpeStep {
    /// Step `j` (1-based) of an `m`-bit run, given the bits `phi_k` for
    /// `k > m - j + 1` already measured (`bits[k - 1]`).
    pub fn new(j: u32, m: u32, bits: &[u8]) -> Self {
        let m_power = 1u64 << (m - j);
        let theta = -PI
            * ((m - j + 2)..=m)
                .map(|k| bits[k as usize - 1] as f64 * 2f64.powi(m as i32 - j as i32 - k as i32 + 1))
                .sum::<f64>();
        Self { m_power, theta }
    }

    /// `Pr[E = 1] = (1 - cos(M phi + theta)) / 2`.
    pub fn probability_one(&self, phi: f64) -> f64 {
        let angle = (self.m_power as f64 * phi).rem_euclid(2.0 * PI) + self.theta;
        ((1.0 - angle.cos()) / 2.0).clamp(0.0, 1.0)
    }
}

/// Iterative phase estimation of `phi = 2 pi 0.phi_1...phi_m` with
/// `shots_per_bit` majority-voted shots per bit.
pub fn ipe_baseline(phi: f64, m: u32, shots_per_bit: u64, seed: u64) -> Result<(f64, ResourceLedger)> {
    if !(1..=62).contains(&m) {
        return domain(format!("bit count must lie in [1, 62], got {m}"));
    }
    if shots_per_bit < 1 {
        return domain("shots_per_bit must be at least 1");
    }
    if !phi.is_finite() {
        return domain("phase must be finite");
    }
    let phi = phi.rem_euclid(2.0 * PI);
    let mut bits = vec![0u8; m as usize];
    let mut ledger = ResourceLedger::new();
    for j in 1..=m {
        let step = IpeStep::new(j, m, &bits);
        let p = step.probability_one(phi);
        let mut rng = RngStream::new(seed, j as u64);
        let ones = bernoulli_trials(p, shots_per_bit, &mut rng)?;
        bits[(m - j) as usize] = u8::from(2 * ones > shots_per_bit);
        ledger = ledger.record_shots(step.m_power, shots_per_bit)?;
    }
    let phi_hat = 2.0
        * PI
        * bits
            .iter()
            .enumerate()
            .map(|(i, &b)| b as f64 * 2f64.powi(-(i as i32 + 1)))
            .sum::<f64>();
    Ok((phi_hat, ledger))
}
