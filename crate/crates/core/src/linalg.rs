//! Small dense complex linear algebra used by the propagator and the
//! Floquet decomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;


/// `exp(-i tau H)` for Hermitian `H`, via its spectral decomposition.
///
/// The result is unitary to rounding regardless of `tau * ||H||`.
pub fn expm_hermitian(h: &CMatrix, tau: f64) -> CMatrix {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let q = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -tau * e)),
    );
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * q.adjoint()
}

/// Frobenius norm of `U^† U - 1`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

/// Largest elementwise deviation between `a` and `b^†`.
pub fn adjoint_defect(a: &CMatrix, b: &CMatrix) -> f64 {
    let bd = b.adjoint();
    a.iter()
        .zip(bd.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a unitary matrix.
///
/// Returns the eigenvalues (projected onto the unit circle) and an
/// orthonormal set of eigenvectors as matrix columns. A unitary matrix is
/// normal, so its complex Schur form is diagonal up to rounding and the Schur
/// vectors are eigenvectors, orthonormal also inside degenerate eigenspaces.
pub fn unitary_eigen(u: &CMatrix) -> (Vec<Complex64>, CMatrix) {
    let n = u.nrows();
    let schur = u
        .clone()
        .try_schur(1e-15, 10_000)
        .unwrap_or_else(|| u.clone().schur());
    let (mut q, t) = schur.unpack();
    let values = (0..n)
        .map(|j| {
            let z = t[(j, j)];
            z / z.norm()
        })
        .collect();
    gram_schmidt(&mut q);
    (values, q)
}

/// Modified Gram-Schmidt on the columns of `q`, in place.
pub(crate) fn gram_schmidt(q: &mut CMatrix) {
    let n = q.ncols();
    for j in 0..n {
        for i in 0..j {
            let proj = q.column(i).dotc(&q.column(j));
            let ci = q.column(i).clone_owned();
            let mut cj = q.column_mut(j);
            cj -= ci * proj;
        }
        let norm = q.column(j).norm();
        q.column_mut(j).unscale_mut(norm);
    }
}
