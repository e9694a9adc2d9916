//! Small dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

/// Leading eigenpair of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: CVector,
}

/// `(A + A†) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest absolute deviation of `a` from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
///
/// The eigenvector's first non-negligible component is rotated onto the
/// positive real axis so repeated calls on nearby matrices give nearby
/// vectors.
pub fn leading_eigenpair(a: &CMatrix) -> EigenPair {
    assert!(
        a.is_square() && a.nrows() > 0,
        "leading_eigenpair needs a square, nonempty matrix"
    );
    let eig = a.clone().symmetric_eigen();
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty spectrum");
    let mut vector = eig.eigenvectors.column(idx).into_owned();
    let norm = vector.norm();
    vector /= Complex64::new(norm, 0.0);
    normalize_phase(&mut vector);
    EigenPair { value, vector }
}

/// Rotate `v` so that its first component with modulus above `1e-8 * ‖v‖`
/// is real and positive.
pub fn normalize_phase(v: &mut CVector) {
    let scale = v.norm();
    if scale == 0.0 {
        return;
    }
    if let Some(pivot) = v.iter().find(|c| c.norm() > 1e-8 * scale).copied() {
        let rot = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|c| *c *= rot);
    }
}

/// Lower-triangular `L` with `L·L† = a`, reading the lower triangle of `a`.
///
/// Every pivot must be real positive; `nalgebra`'s complex Cholesky takes
/// complex square roots of negative pivots and so cannot be used as a
/// definiteness test.
pub fn cholesky_factor(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::InvalidArgument("Cholesky needs a square matrix".into()));
    }
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numeric("matrix is not positive definite".into()));
        }
        let pivot = d.sqrt();
        l[(j, j)] = c(pivot);
        for i in j + 1..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / pivot;
        }
    }
    Ok(l)
}

/// `a⁻¹·b` for Hermitian positive definite `a`.
pub fn hpd_solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let l = cholesky_factor(a)?;
    let mut x = b.clone();
    if !l.solve_lower_triangular_mut(&mut x) || !l.ad_solve_lower_triangular_mut(&mut x) {
        return Err(Error::Numeric("singular Cholesky factor".into()));
    }
    Ok(x)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_triangular_inverse(l: &CMatrix) -> Result<CMatrix> {
    let n = l.nrows();
    let mut inv = CMatrix::identity(n, n);
    if !l.solve_lower_triangular_mut(&mut inv) {
        return Err(Error::Numeric("singular triangular factor".into()));
    }
    Ok(inv)
}

/// `a^{-1/2}` of a Hermitian positive definite matrix through its
/// eigendecomposition.
pub fn inverse_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let eig = a.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Numeric("matrix is not positive definite".into()));
    }
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.sqrt().recip(), 0.0)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Trace of a Hermitian matrix as a real number.
pub fn real_trace(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|c| c.re).sum()
}

/// `X·X†` with the result forced exactly Hermitian.
pub fn gram(x: &CMatrix) -> CMatrix {
    hermitian_part(&(x * x.adjoint()))
}

/// `a†·b` for column vectors.
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

/// `a†·M·a` as a real number (M Hermitian).
pub fn quadratic_form(m: &CMatrix, a: &CVector) -> f64 {
    a.dotc(&(m * a)).re
}

pub fn max_abs_entry(a: &CMatrix) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}
