//! Kronecker-family products on dense complex matrices.
//!
//! The FIM assembly never materialises these products; they exist to check
//! the factorised forms against their definitions.

use crate::CMatrix;
use num_complex::Complex64;

/// Kronecker product `A ⊗ B`.
pub fn kronecker(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Khatri-Rao (column-wise Kronecker) product `A * B`.
///
/// Column `j` of the result is `a_j ⊗ b_j`.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.ncols(), "khatri_rao: column counts differ");
    let br = b.nrows();
    CMatrix::from_fn(a.nrows() * br, a.ncols(), |i, j| {
        a[(i / br, j)] * b[(i % br, j)]
    })
}

/// Face-splitting (row-wise Kronecker) product `A • B`.
///
/// Row `i` of the result is `a_iᵀ ⊗ b_iᵀ`.
pub fn face_splitting(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "face_splitting: row counts differ");
    let bc = b.ncols();
    CMatrix::from_fn(a.nrows(), a.ncols() * bc, |i, j| {
        a[(i, j / bc)] * b[(i, j % bc)]
    })
}

/// Entry-wise product `A ∘ B`.
pub fn hadamard(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.component_mul(b)
}

/// Complex identity of size `n`.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Diagonal matrix from a slice of complex entries.
pub fn diag(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&crate::CVector::from_column_slice(entries))
}
