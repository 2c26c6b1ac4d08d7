//! Phase estimation to amplitude estimation to eigenvalue estimation, as
//! explicit matrices with recovery maps and query multipliers.

use crate::blockenc::{BlockEncoding, HermitianOp, UNITARY_TOL};
use crate::error::{Error, Result};
use crate::estimator::{estimate_ee_with_schedule, AlphaSchedule, EEInstance, ProbabilityPath};
use crate::linalg::{
    basis_vector, c, hadamard, hermiticity_defect, kron, max_abs_diff, pauli_z, qubit_controlled,
    qubit_projector, unitarity_defect, CMatrix, CVector,
};
use crate::sampler::ResourceLedger;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Residual tolerance for eigenvector and state-preparation checks.
pub const STATE_TOL: f64 = 1e-10;

/// Oracle calls per query of the phase-to-amplitude circuit: `U_psi` and
/// controlled-`U`.
pub const PE_TO_AE_MULTIPLIER: u64 = 2;

fn construction<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Construction(msg.into()))
}

/// Haar-distributed unitary from the QR decomposition of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal absorbed.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let normal = rand_distr::StandardNormal;
    let g = CMatrix::from_fn(n, n, |_, _| c(rng.sample(normal), rng.sample(normal)));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[derive(Debug, Clone)]
pub struct PEInstance {
    pub u: CMatrix,
    pub psi: CVector,
    pub u_psi: CMatrix,
    /// Eigenphase of `psi` in `[0, 2 pi)`; kept for validation only.
    pub true_phi: f64,
}

impl PEInstance {
    pub fn new(u: CMatrix, psi: CVector, u_psi: CMatrix) -> Result<Self> {
        let n = u.nrows();
        if u.shape() != (n, n) || u_psi.shape() != (n, n) || psi.len() != n || n == 0 {
            return construction("inconsistent phase estimation instance dimensions");
        }
        for (name, m) in [("U", &u), ("U_psi", &u_psi)] {
            let d = unitarity_defect(m);
            if d > UNITARY_TOL {
                return construction(format!("{name} is not unitary (defect {d:.3e})"));
            }
        }
        let prepared = (&u_psi * basis_vector(n, 0) - &psi).norm();
        if prepared > STATE_TOL {
            return construction(format!("U_psi does not prepare psi (residual {prepared:.3e})"));
        }
        let upsi = &u * &psi;
        let overlap = psi.dotc(&upsi);
        let residual = (&upsi - &psi * overlap).norm();
        if residual > STATE_TOL || (overlap.norm() - 1.0).abs() > STATE_TOL {
            return construction(format!("psi is not an eigenvector of U (residual {residual:.3e})"));
        }
        Ok(Self {
            u,
            psi,
            u_psi,
            true_phi: overlap.arg().rem_euclid(2.0 * PI),
        })
    }

    /// `U = V diag(e^{i phi}, e^{i phi_2}, ...) V^dagger` for a random unitary
    /// `V`, with `psi = V e_0` and `U_psi = V`.
    pub fn from_phase(phi: f64, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return construction("dimension must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_unitary(dim, &mut rng);
        let phases: Vec<Complex64> = std::iter::once(phi)
            .chain((1..dim).map(|_| rng.random_range(0.0..2.0 * PI)))
            .map(|t| Complex64::from_polar(1.0, t))
            .collect();
        let u = &v * CMatrix::from_diagonal(&CVector::from_vec(phases)) * v.adjoint();
        let psi = v.column(0).into_owned();
        Self::new(u, psi, v)
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct AEInstance {
    pub a: CMatrix,
    pub good_projector: CMatrix,
    pub oracle: CMatrix,
    /// `||Pi A e_0||`; kept for validation only.
    pub true_amp: f64,
}

impl AEInstance {
    pub fn new(a: CMatrix, good_projector: CMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.shape() != (n, n) || good_projector.shape() != (n, n) || n == 0 {
            return construction("inconsistent amplitude estimation instance dimensions");
        }
        let d = unitarity_defect(&a);
        if d > UNITARY_TOL {
            return construction(format!("A is not unitary (defect {d:.3e})"));
        }
        let idem = max_abs_diff(&(&good_projector * &good_projector), &good_projector);
        if idem > 1e-12 || hermiticity_defect(&good_projector) > 1e-12 {
            return construction(format!("good projector is not an orthogonal projector ({idem:.3e})"));
        }
        let oracle = CMatrix::identity(n, n) - &good_projector * c(2.0, 0.0);
        let true_amp = (&good_projector * a.column(0)).norm().min(1.0);
        Ok(Self {
            a,
            good_projector,
            oracle,
            true_amp,
        })
    }

    /// Single-qubit instance `A e_0 = sqrt(1 - a^2) |0> + a |1>` with good
    /// subspace `|1>`.
    pub fn from_amplitude(amp: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amp) {
            return Err(Error::Domain(format!("amplitude must lie in [0, 1], got {amp}")));
        }
        let s = amp;
        let co = (1.0 - amp * amp).max(0.0).sqrt();
        let a = CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]);
        Self::new(a, qubit_projector(1))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `A e_0`.
    pub fn prepared_state(&self) -> CVector {
        self.a.column(0).into_owned()
    }
}

/// Per-oracle application counts recorded while assembling a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleCalls {
    pub a: u64,
    pub a_dagger: u64,
    pub o_a: u64,
}

impl OracleCalls {
    pub fn total(&self) -> u64 {
        self.a + self.a_dagger + self.o_a
    }
}

/// Hands out `A`, `A^dagger` and `O_A`, counting each use.
struct CountingOracles<'a> {
    inst: &'a AEInstance,
    calls: OracleCalls,
}

impl<'a> CountingOracles<'a> {
    fn new(inst: &'a AEInstance) -> Self {
        Self {
            inst,
            calls: OracleCalls::default(),
        }
    }

    fn a(&mut self) -> CMatrix {
        self.calls.a += 1;
        self.inst.a.clone()
    }

    fn a_dagger(&mut self) -> CMatrix {
        self.calls.a_dagger += 1;
        self.inst.a.adjoint()
    }

    fn o_a(&mut self) -> CMatrix {
        self.calls.o_a += 1;
        self.inst.oracle.clone()
    }

    /// `2 e_0 e_0^dagger - I`.
    fn zero_reflection(&self) -> CMatrix {
        let n = self.inst.dim();
        let mut r = -CMatrix::identity(n, n);
        r[(0, 0)] = c(1.0, 0.0);
        r
    }

    /// `Q = A (2|0><0| - I) A^dagger O_A`.
    fn grover(&mut self) -> CMatrix {
        let refl = self.zero_reflection();
        self.a() * refl * self.a_dagger() * self.o_a()
    }

    /// `Q^dagger = O_A A (2|0><0| - I) A^dagger`.
    fn grover_adjoint(&mut self) -> CMatrix {
        let refl = self.zero_reflection();
        self.o_a() * self.a() * refl * self.a_dagger()
    }
}

#[derive(Debug, Clone)]
pub struct GroverOp {
    pub q: CMatrix,
    pub calls: OracleCalls,
    good: CVector,
    bad: CVector,
}

/// `Q = A (2 e_0 e_0^dagger - I) A^dagger O_A`.
pub fn grover_operator(inst: &AEInstance) -> Result<GroverOp> {
    let mut oracles = CountingOracles::new(inst);
    let q = oracles.grover();
    let d = unitarity_defect(&q);
    if d > UNITARY_TOL {
        return construction(format!("Grover operator is not unitary (defect {d:.3e})"));
    }
    let state = inst.prepared_state();
    let good = &inst.good_projector * &state;
    let bad = &state - &good;
    Ok(GroverOp {
        q,
        calls: oracles.calls,
        good,
        bad,
    })
}

impl GroverOp {
    /// Eigenphases of `Q` restricted to the span of the good and bad
    /// components of `A e_0`; one phase when either component vanishes.
    pub fn subspace_eigenphases(&self) -> Vec<f64> {
        let basis: Vec<CVector> = [&self.good, &self.bad]
            .into_iter()
            .filter(|v| v.norm() > 1e-12)
            .map(|v| v / c(v.norm(), 0.0))
            .collect();
        let m = CMatrix::from_fn(basis.len(), basis.len(), |i, j| basis[i].dotc(&(&self.q * &basis[j])));
        let eigenvalues = if basis.len() == 1 {
            vec![m[(0, 0)]]
        } else {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr - det * c(4.0, 0.0)).sqrt();
            vec![(tr + disc) / c(2.0, 0.0), (tr - disc) / c(2.0, 0.0)]
        };
        let mut phases: Vec<f64> = eigenvalues.iter().map(|z| z.arg()).collect();
        phases.sort_by(f64::total_cmp);
        phases
    }
}

/// Phase estimation instance recast as amplitude estimation.
#[derive(Debug, Clone)]
pub struct PeToAe {
    pub ae: AEInstance,
    /// Oracle calls per application of `A`.
    pub multiplier: u64,
}

impl PeToAe {
    /// `phi = 2 arcsin(a)`, in `[0, pi]`.
    pub fn recover(&self, amp: f64) -> f64 {
        recover_phase(amp)
    }
}

pub fn recover_phase(amp: f64) -> f64 {
    2.0 * amp.clamp(0.0, 1.0).asin()
}

/// `A = (I ⊗ H) CU (I ⊗ H) (U_psi ⊗ I)` with the ancilla as the least
/// significant factor, `O_A = I ⊗ Z` and good subspace `ancilla = |1>`.
pub fn pe_to_ae(inst: &PEInstance) -> Result<PeToAe> {
    let n = inst.dim();
    let id = CMatrix::identity(n, n);
    let h = kron(&id, &hadamard());
    let cu = kron(&id, &qubit_projector(0)) + kron(&inst.u, &qubit_projector(1));
    let prep = kron(&inst.u_psi, &CMatrix::identity(2, 2));
    let a = &h * cu * &h * prep;
    let projector = kron(&id, &qubit_projector(1));
    let ae = AEInstance::new(a, projector)?;
    let oracle_check = max_abs_diff(&ae.oracle, &kron(&id, &pauli_z()));
    if oracle_check > 1e-12 {
        return construction("marking oracle differs from Z on the ancilla");
    }
    Ok(PeToAe {
        ae,
        multiplier: PE_TO_AE_MULTIPLIER,
    })
}

/// Amplitude estimation instance recast as eigenvalue estimation.
#[derive(Debug, Clone)]
pub struct AeToEe {
    pub ee: EEInstance,
    pub block_encoding: BlockEncoding,
    /// Oracle calls made by one application of `U_H`.
    pub calls: OracleCalls,
}

impl AeToEe {
    pub fn multiplier(&self) -> u64 {
        self.calls.total()
    }

    /// `p = (1 - mu) / 2`.
    pub fn recover(&self, mu: f64) -> f64 {
        recover_probability(mu)
    }
}

pub fn recover_probability(mu: f64) -> f64 {
    ((1.0 - mu) / 2.0).clamp(0.0, 1.0)
}

/// `U_H = (H ⊗ I)(|0><0| ⊗ Q^dagger + |1><1| ⊗ Q)(H ⊗ I)`, a one-ancilla
/// block-encoding of `(Q + Q^dagger) / 2` with `gamma = 1`.
pub fn ae_to_ee(inst: &AEInstance) -> Result<AeToEe> {
    let n = inst.dim();
    let mut oracles = CountingOracles::new(inst);
    let q = oracles.grover();
    let q_dag = oracles.grover_adjoint();
    let h = kron(&hadamard(), &CMatrix::identity(n, n));
    let u_h = &h * qubit_controlled(&q_dag, &q) * &h;
    let target = (&q + &q_dag) * c(0.5, 0.0);
    // symmetrize away rounding so the Hermiticity check sees the exact operator
    let target = (&target + target.adjoint()) * c(0.5, 0.0);
    let op = HermitianOp::with_max_dim(target, n.max(crate::blockenc::DEFAULT_MAX_DIM))?;
    let block_encoding = BlockEncoding::new(u_h, 1.0, 1, op.clone())?;
    let ee = EEInstance::new(op, 1.0, inst.prepared_state())?;
    Ok(AeToEe {
        ee,
        block_encoding,
        calls: oracles.calls,
    })
}

/// Query ledgers of a composed solve, one per problem level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StagedLedger {
    /// Queries to `U_H`.
    pub ee: ResourceLedger,
    /// Calls to `A`, `A^dagger` and `O_A`.
    pub ae: ResourceLedger,
    /// Calls to `U_psi` and controlled-`U`; equal to `ae` for a direct
    /// amplitude estimation solve.
    pub pe: ResourceLedger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeSolution {
    pub p_hat: f64,
    pub amp_hat: f64,
    pub mu_hat: f64,
    pub ee_multiplier: u64,
    pub ledgers: StagedLedger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeSolution {
    pub phi_hat: f64,
    pub amp_hat: f64,
    pub mu_hat: f64,
    /// Image of `[mu_hat - eps, mu_hat + eps]` under `mu -> arccos(mu)`,
    /// measured from `phi_hat`.
    pub tolerance: f64,
    pub ee_multiplier: u64,
    pub pe_multiplier: u64,
    pub ledgers: StagedLedger,
}

impl PeSolution {
    pub fn total_multiplier(&self) -> u64 {
        self.ee_multiplier * self.pe_multiplier
    }
}

fn solve_ee(ee: &EEInstance, eps: f64, alpha: f64, seed: u64) -> Result<crate::estimator::Estimate> {
    let sched = AlphaSchedule::new(alpha, eps, ee.gamma)?;
    estimate_ee_with_schedule(ee, &sched, seed, ProbabilityPath::Eigenstate)
}

pub fn solve_ae_via_ee(inst: &AEInstance, eps: f64, alpha: f64, seed: u64) -> Result<AeSolution> {
    let red = ae_to_ee(inst)?;
    let est = solve_ee(&red.ee, eps, alpha, seed)?;
    let p_hat = red.recover(est.mu_hat);
    let ae = est.ledger.scaled(red.multiplier());
    Ok(AeSolution {
        p_hat,
        amp_hat: p_hat.sqrt(),
        mu_hat: est.mu_hat,
        ee_multiplier: red.multiplier(),
        ledgers: StagedLedger {
            ee: est.ledger,
            ae,
            pe: ae,
        },
    })
}

/// `phi = arccos(mu)` composed through both reductions. Recovers phases in
/// `[0, pi]`; `phi` and `2 pi - phi` are indistinguishable.
pub fn solve_pe_via_ee(inst: &PEInstance, eps: f64, alpha: f64, seed: u64) -> Result<PeSolution> {
    let pe_red = pe_to_ae(inst)?;
    let ae = solve_ae_via_ee(&pe_red.ae, eps, alpha, seed)?;
    let phi_hat = pe_red.recover(ae.amp_hat);
    let image = |mu: f64| mu.clamp(-1.0, 1.0).acos();
    let tolerance = (image(ae.mu_hat - eps) - phi_hat)
        .abs()
        .max((image(ae.mu_hat + eps) - phi_hat).abs());
    Ok(PeSolution {
        phi_hat,
        amp_hat: ae.amp_hat,
        mu_hat: ae.mu_hat,
        tolerance,
        ee_multiplier: ae.ee_multiplier,
        pe_multiplier: pe_red.multiplier,
        ledgers: StagedLedger {
            pe: ae.ledgers.ae.scaled(pe_red.multiplier),
            ..ae.ledgers
        },
    })
}

/// `A (e_0 ⊗ e_0)` divided by the global phase `e^{i phi / 2}`.
pub fn dephased_prepared_state(red: &PeToAe, phi: f64) -> CVector {
    red.ae.prepared_state() * Complex64::from_polar(1.0, -phi / 2.0)
}
