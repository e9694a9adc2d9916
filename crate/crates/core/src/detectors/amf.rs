//! Adaptive matched filter, obtained as the GLRT of the deterministic-jammer
//! model when the jammer signature is constrained orthogonal to the target
//! in whitened space.

use super::WhitenedData;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::scenario::HermitianCovariance;

/// `|v†M̂⁻¹z|² / (v†M̂⁻¹v)`.
pub fn amf_statistic(z_cut: &CVector, v: &CVector, m_hat: &HermitianCovariance) -> Result<f64> {
    let mv = linalg::hpd_solve(m_hat.matrix(), v)?;
    let den = linalg::inner(v, &mv).re;
    if !(den > 0.0) {
        return Err(Error::Numeric("v†M̂⁻¹v is not positive".into()));
    }
    Ok(linalg::inner(&mv, z_cut).norm_sqr() / den)
}

/// Projector form `x_cut†P_{v₀}x_cut` on whitened data.
pub fn amf_from_whitened(w: &WhitenedData) -> f64 {
    linalg::inner(&w.v0, &w.x_cut).norm_sqr() / w.v0.norm_squared()
}

/// Orthonormal basis `U` (N × (N−1)) of the orthogonal complement of `v0`.
pub fn orthogonal_complement(v0: &CVector) -> CMatrix {
    let n = v0.len();
    let mut a = CMatrix::zeros(n, n + 1);
    a.set_column(0, v0);
    a.columns_mut(1, n).fill_with_identity();
    let q = a.qr().q();
    q.columns(1, n - 1).into_owned()
}

/// H0 and H1 log-likelihood cores of the orthogonality-constrained GLRT:
/// `λ₁(U†S₁U) − Tr S₁` and `λ₁(U†S₁U) − (x_cut†P⊥x_cut + Σ‖xᵢ‖²)`.
/// Their difference is the AMF statistic.
pub fn amf_constrained_core(x_all: &CMatrix, v0: &CVector) -> Result<(f64, f64)> {
    let v_norm = v0.norm_squared();
    if !(v_norm > 0.0) {
        return Err(Error::InvalidArgument("steering vector is zero".into()));
    }
    let s1 = linalg::gram(x_all);
    let basis = orthogonal_complement(v0);
    let lambda = if basis.ncols() == 0 {
        0.0
    } else {
        let reduced = linalg::hermitian_part(&(basis.adjoint() * &s1 * &basis));
        linalg::leading_eigenpair(&reduced).value
    };
    let x_cut = x_all.column(0).into_owned();
    let cut_perp = x_cut.norm_squared() - linalg::inner(v0, &x_cut).norm_sqr() / v_norm;
    let omega_energy: f64 = x_all.columns(1, x_all.ncols() - 1).iter().map(|z| z.norm_sqr()).sum();
    let h0 = lambda - linalg::real_trace(&s1);
    let h1 = lambda - (cut_perp + omega_energy);
    Ok((h0, h1))
}
