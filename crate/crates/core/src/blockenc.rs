//! Hermitian operators, block-encodings and polynomial eigenvalue
//! transformations at matrix level.
//!
//! The transformation `P(H')` is computed directly rather than through a
//! phase-factor circuit; [`TransformedOp::query_count`] records the number of
//! block-encoding queries such a circuit would spend, which is the degree of
//! `P`.

use crate::chebpoly::ChebPoly;
use crate::error::{domain, Error, Result};
use crate::linalg::{
    hermitian_eigen, hermiticity_defect, max_abs_diff, unitarity_defect, CMatrix, CVector,
};
use num_complex::Complex64;

/// Default cap on operator dimension.
pub const DEFAULT_MAX_DIM: usize = 64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-12;
pub const BLOCK_TOL: f64 = 1e-10;
pub const SPECTRAL_TOL: f64 = 1e-9;
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Tiny negative eigenvalues of `I - (H/gamma)^2` down to this value are
/// treated as zero.
const SQRT_CLAMP: f64 = -1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp {
    matrix: CMatrix,
}

impl HermitianOp {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_max_dim(matrix, DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(matrix: CMatrix, max_dim: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return domain(format!(
                "Hermitian operator must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        if matrix.nrows() > max_dim {
            return domain(format!(
                "dimension {} exceeds the configured cap {max_dim}",
                matrix.nrows()
            ));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return domain("matrix entries must be finite");
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return domain(format!("matrix is not Hermitian (defect {defect:.3e})"));
        }
        Ok(Self { matrix })
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ascending eigenvalues and eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        hermitian_eigen(&self.matrix)
    }

    pub fn spectral_norm(&self) -> f64 {
        let (values, _) = self.eigen();
        values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// A unitary whose top-left block, scaled by `gamma`, is the encoded
/// operator: `H = gamma (<0^a| ⊗ I) U (|0^a> ⊗ I)`. The ancilla register is
/// the most significant tensor factor.
#[derive(Debug, Clone)]
pub struct BlockEncoding {
    unitary: CMatrix,
    gamma: f64,
    ancillas: usize,
    encoded: HermitianOp,
}

impl BlockEncoding {
    pub fn new(unitary: CMatrix, gamma: f64, ancillas: usize, encoded: HermitianOp) -> Result<Self> {
        if !(gamma > 0.0) {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        let n = encoded.dim();
        let size = n << ancillas;
        if unitary.shape() != (size, size) {
            return Err(Error::Construction(format!(
                "unitary is {}x{}, expected {size}x{size}",
                unitary.nrows(),
                unitary.ncols()
            )));
        }
        let defect = unitarity_defect(&unitary);
        if defect > UNITARY_TOL {
            return Err(Error::Construction(format!(
                "block-encoding matrix is not unitary (defect {defect:.3e})"
            )));
        }
        let block = unitary.view((0, 0), (n, n)).map(|z| z * gamma);
        let mismatch = max_abs_diff(&block, encoded.matrix());
        if mismatch > BLOCK_TOL {
            return Err(Error::Construction(format!(
                "top-left block does not encode the operator (mismatch {mismatch:.3e})"
            )));
        }
        Ok(Self {
            unitary,
            gamma,
            ancillas,
            encoded,
        })
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn encoded(&self) -> &HermitianOp {
        &self.encoded
    }

    /// `gamma (<0^a| ⊗ I) U (|0^a> ⊗ I)`.
    pub fn decoded_block(&self) -> CMatrix {
        let n = self.encoded.dim();
        self.unitary.view((0, 0), (n, n)).map(|z| z * self.gamma)
    }
}

/// One-ancilla unitary dilation `[[H/g, S], [S, -H/g]]` with
/// `S = sqrt(I - (H/g)^2)`.
pub fn dilate(h: &HermitianOp, gamma: f64) -> Result<BlockEncoding> {
    if !(gamma > 0.0) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    let norm = h.spectral_norm();
    if norm > gamma * (1.0 + HERMITIAN_TOL) {
        return domain(format!("spectral norm {norm} exceeds gamma {gamma}"));
    }
    let n = h.dim();
    let scaled = h.matrix().map(|z| z / gamma);
    let complement = CMatrix::identity(n, n) - &scaled * &scaled;
    let (values, vectors) = hermitian_eigen(&complement);
    let mut roots = Vec::with_capacity(n);
    for v in values {
        if v < SQRT_CLAMP {
            return domain(format!("I - (H/gamma)^2 has eigenvalue {v} < 0"));
        }
        roots.push(Complex64::new(v.max(0.0).sqrt(), 0.0));
    }
    let sqrt = &vectors * CMatrix::from_diagonal(&CVector::from_vec(roots)) * vectors.adjoint();

    let mut unitary = CMatrix::zeros(2 * n, 2 * n);
    unitary.view_mut((0, 0), (n, n)).copy_from(&scaled);
    unitary.view_mut((0, n), (n, n)).copy_from(&sqrt);
    unitary.view_mut((n, 0), (n, n)).copy_from(&sqrt);
    unitary.view_mut((n, n), (n, n)).copy_from(&(-scaled));
    BlockEncoding::new(unitary, gamma, 1, h.clone())
}

/// `(H - mu0 I) / (gamma + |mu0|)`, whose spectrum lies in `[-1, 1]` when
/// `||H|| <= gamma` and `|mu0| <= gamma`.
pub fn shift_and_scale(h: &HermitianOp, mu0: f64, gamma: f64) -> Result<HermitianOp> {
    if !(gamma > 0.0) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    if !(mu0.abs() <= gamma) {
        return domain(format!("|mu0| = {} exceeds gamma {gamma}", mu0.abs()));
    }
    let norm = h.spectral_norm();
    if norm > gamma * (1.0 + HERMITIAN_TOL) {
        return domain(format!("spectral norm {norm} exceeds gamma {gamma}"));
    }
    let n = h.dim();
    let denom = gamma + mu0.abs();
    let shifted = (h.matrix() - CMatrix::identity(n, n) * Complex64::new(mu0, 0.0)) / Complex64::new(denom, 0.0);
    HermitianOp::with_max_dim(shifted, n)
}

/// `P(H')` together with the number of block-encoding queries a circuit
/// realizing it would use.
#[derive(Debug, Clone)]
pub struct TransformedOp {
    pub matrix: CMatrix,
    pub query_count: usize,
}

/// Matrix Chebyshev recurrence `sum_k c_k T_k(H')`.
pub fn apply_poly(hp: &HermitianOp, poly: &ChebPoly) -> Result<TransformedOp> {
    let radius = hp.spectral_norm();
    if radius > 1.0 + SPECTRAL_TOL {
        return domain(format!("spectral radius {radius} exceeds 1"));
    }
    if !poly.is_bounded() {
        return domain(format!(
            "polynomial is not bounded by 1 on [-1, 1] (sup {})",
            poly.sup_norm()
        ));
    }
    let n = hp.dim();
    let x = hp.matrix();
    let coeffs = poly.coeffs();
    let scale = |m: &CMatrix, s: f64| m.map(|z| z * s);

    let mut prev = CMatrix::identity(n, n);
    let mut acc = scale(&prev, coeffs[0]);
    if coeffs.len() > 1 {
        let mut cur = x.clone();
        acc += scale(&cur, coeffs[1]);
        for &c in &coeffs[2..] {
            let next = scale(&(x * &cur), 2.0) - &prev;
            acc += scale(&next, c);
            prev = cur;
            cur = next;
        }
    }
    Ok(TransformedOp {
        matrix: acc,
        query_count: poly.degree(),
    })
}

/// `||P(H') psi||^2`, the probability that the block-encoding register is
/// found in the all-zeros (RIGHT) state.
pub fn right_probability(transformed: &TransformedOp, psi: &CVector) -> Result<f64> {
    if psi.len() != transformed.matrix.ncols() {
        return domain(format!(
            "state has dimension {}, operator {}",
            psi.len(),
            transformed.matrix.ncols()
        ));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return domain(format!("state is not normalized (norm {norm})"));
    }
    let out = &transformed.matrix * psi;
    Ok(out.norm_squared().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, c, ONE, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_hermitian(rng: &mut impl Rng, n: usize, norm: f64) -> HermitianOp {
        let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        let current = HermitianOp::new(h.clone()).unwrap().spectral_norm();
        HermitianOp::new(h * c(norm / current, 0.0)).unwrap()
    }

    fn eigen_transform(h: &HermitianOp, poly: &ChebPoly) -> CMatrix {
        let (values, vectors) = h.eigen();
        let diag: Vec<Complex64> = values.iter().map(|&v| c(poly.eval(v.clamp(-1.0, 1.0)).unwrap(), 0.0)).collect();
        &vectors * CMatrix::from_diagonal(&CVector::from_vec(diag)) * vectors.adjoint()
    }

    #[test]
    fn dilate_zero_is_pauli_x() {
        let h = HermitianOp::new(CMatrix::from_element(1, 1, ZERO)).unwrap();
        let be = dilate(&h, 1.0).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!(max_abs_diff(be.unitary(), &x) < 1e-15);
    }

    #[test]
    fn dilate_identity_is_reflection() {
        let h = HermitianOp::diagonal(&[1.0, 1.0]).unwrap();
        let be = dilate(&h, 1.0).unwrap();
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, -ONE, -ONE]));
        assert!(max_abs_diff(be.unitary(), &expected) < 1e-15);
    }

    #[test]
    fn dilate_random_satisfies_block_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let h = random_hermitian(&mut rng, 4, 0.9);
            let be = dilate(&h, 1.0).unwrap();
            assert!(unitarity_defect(be.unitary()) <= 1e-12);
            assert!(max_abs_diff(&be.decoded_block(), h.matrix()) <= 1e-10);
            assert_eq!(be.ancillas(), 1);
        }
    }

    #[test]
    fn dilate_rejects_large_norm() {
        let h = HermitianOp::diagonal(&[0.5, -1.5]).unwrap();
        assert!(matches!(dilate(&h, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn dilate_at_full_norm_with_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 3, 2.0);
        let be = dilate(&h, 2.0).unwrap();
        assert!(max_abs_diff(&be.decoded_block(), h.matrix()) <= 1e-10);
    }

    #[test]
    fn shift_with_zero_center_is_plain_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_hermitian(&mut rng, 4, 1.5);
        let hp = shift_and_scale(&h, 0.0, 2.0).unwrap();
        assert!(max_abs_diff(hp.matrix(), &h.matrix().map(|z| z / 2.0)) < 1e-15);
    }

    #[test]
    fn shift_of_gamma_identity_vanishes() {
        let h = HermitianOp::diagonal(&[0.7, 0.7]).unwrap();
        let hp = shift_and_scale(&h, 0.7, 0.7).unwrap();
        assert!(hp.matrix().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn shift_maps_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let gamma = rng.random_range(0.5..2.0);
            let norm = gamma * rng.random_range(0.1..1.0);
            let h = random_hermitian(&mut rng, 5, norm);
            let mu0 = rng.random_range(-gamma..gamma);
            let (before, _) = h.eigen();
            let (after, _) = shift_and_scale(&h, mu0, gamma).unwrap().eigen();
            for (b, a) in before.iter().zip(&after) {
                assert!((a - (b - mu0) / (gamma + mu0.abs())).abs() < 1e-12);
                assert!(a.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn shift_rejects_out_of_range_center() {
        let h = HermitianOp::diagonal(&[0.1]).unwrap();
        assert!(shift_and_scale(&h, 1.5, 1.0).is_err());
    }

    #[test]
    fn apply_identity_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_hermitian(&mut rng, 4, 0.8);
        let t = apply_poly(&h, &ChebPoly::chebyshev_t(1)).unwrap();
        assert_eq!(t.query_count, 1);
        assert!(max_abs_diff(&t.matrix, h.matrix()) < 1e-15);
    }

    #[test]
    fn apply_t2_on_signs() {
        let h = HermitianOp::diagonal(&[1.0, -1.0]).unwrap();
        let t = apply_poly(&h, &ChebPoly::chebyshev_t(2)).unwrap();
        assert!(max_abs_diff(&t.matrix, &CMatrix::identity(2, 2)) < 1e-15);
        assert_eq!(t.query_count, 2);
    }

    #[test]
    fn apply_rejects_wide_spectrum_and_unbounded_poly() {
        let h = HermitianOp::diagonal(&[1.2, 0.0]).unwrap();
        assert!(apply_poly(&h, &ChebPoly::linear_step()).is_err());
        let h = HermitianOp::diagonal(&[0.5, 0.0]).unwrap();
        let big = ChebPoly::new(vec![1.0, 1.0]).unwrap();
        assert!(apply_poly(&h, &big).is_err());
    }

    #[test]
    fn recurrence_matches_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let h = random_hermitian(&mut rng, 6, 1.0);
            let deg = rng.random_range(0..=31);
            let mut coeffs: Vec<f64> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
            let l1: f64 = coeffs.iter().map(|c| c.abs()).sum();
            coeffs.iter_mut().for_each(|c| *c /= l1);
            let p = ChebPoly::new(coeffs).unwrap();
            let t = apply_poly(&h, &p).unwrap();
            assert!(max_abs_diff(&t.matrix, &eigen_transform(&h, &p)) <= 1e-9);
        }
    }

    #[test]
    fn probability_of_top_eigenvector_under_linear_step() {
        let h = HermitianOp::diagonal(&[1.0, -0.3]).unwrap();
        let t = apply_poly(&h, &ChebPoly::linear_step()).unwrap();
        let p = right_probability(&t, &basis_vector(2, 0)).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probability_matches_spectral_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = random_hermitian(&mut rng, 5, 1.0);
        let p = ChebPoly::new(vec![0.3, -0.2, 0.1, 0.25]).unwrap();
        let t = apply_poly(&h, &p).unwrap();
        let psi = CVector::from_fn(5, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let psi = &psi / c(psi.norm(), 0.0);
        let (values, vectors) = h.eigen();
        let expected: f64 = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let overlap = vectors.column(i).dotc(&psi).norm_sqr();
                p.eval(v.clamp(-1.0, 1.0)).unwrap().powi(2) * overlap
            })
            .sum();
        assert!((right_probability(&t, &psi).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn probability_rejects_unnormalized_state() {
        let h = HermitianOp::diagonal(&[0.2]).unwrap();
        let t = apply_poly(&h, &ChebPoly::linear_step()).unwrap();
        let psi = CVector::from_element(1, c(1.1, 0.0));
        assert!(right_probability(&t, &psi).is_err());
    }

    #[test]
    fn hermitian_op_validation() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, c(0.0, 1.0), c(0.0, 1.0), ONE]);
        assert!(HermitianOp::new(m).is_err());
        assert!(HermitianOp::new(CMatrix::zeros(0, 0)).is_err());
        assert!(HermitianOp::new(CMatrix::identity(65, 65)).is_err());
        assert!(HermitianOp::with_max_dim(CMatrix::identity(65, 65), 128).is_ok());
    }
}
