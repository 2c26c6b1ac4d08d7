//! Dense complex linear algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(n, n))
}

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian
/// matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, col| {
        eig.eigenvectors[(r, order[col])]
    });
    (values, vectors)
}

/// Kronecker product `a ⊗ b`, with `a` the more significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `|k><k|` on a qubit.
pub fn qubit_projector(k: usize) -> CMatrix {
    let mut p = CMatrix::zeros(2, 2);
    p[(k, k)] = ONE;
    p
}

/// Block-diagonal `|0><0| ⊗ zero_branch + |1><1| ⊗ one_branch`.
pub fn qubit_controlled(zero_branch: &CMatrix, one_branch: &CMatrix) -> CMatrix {
    kron(&qubit_projector(0), zero_branch) + kron(&qubit_projector(1), one_branch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, -2.0), c(0.0, 2.0), c(-1.0, 0.0)]);
        let (values, vectors) = hermitian_eigen(&m);
        assert!(values[0] <= values[1]);
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(2, values.iter().map(|&v| c(v, 0.0))));
        let back = &vectors * diag * vectors.adjoint();
        assert!(max_abs_diff(&back, &m) < 1e-12);
    }

    #[test]
    fn controlled_gate_blocks() {
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let cx = qubit_controlled(&CMatrix::identity(2, 2), &x);
        assert!(unitarity_defect(&cx) < 1e-15);
        assert_eq!(cx[(2, 3)], ONE);
        assert_eq!(cx[(0, 0)], ONE);
    }
}
