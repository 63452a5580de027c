//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `AB - BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    if b.shape() != a.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    Ok(a * b - b * a)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |A - B|` entrywise; shapes must agree.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `max |U^dagger U - 1|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

/// `exp(-i tau H)` for Hermitian `H`, through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, tau: f64) -> CMatrix {
    let n = h.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // Symmetrize so round-off in the input cannot leak an anti-Hermitian part.
    let hs = (h + h.adjoint()).scale(0.5);
    let eig = hs.symmetric_eigen();
    // One Newton-Schulz step pulls the eigenbasis back onto the unitary group.
    let q = &eig.eigenvectors;
    let three = CMatrix::identity(n, n).scale(3.0);
    let u = &(q * (three - q.adjoint() * q)).scale(0.5);
    let phases =
        CVector::from_iterator(n, eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -tau * e)));
    let mut scaled = u.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[k];
    }
    scaled * u.adjoint()
}

/// `<a|b>`.
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

/// Determinant modulus, used in unitarity diagnostics.
pub fn det_modulus(u: &CMatrix) -> f64 {
    u.clone().determinant().norm()
}
