//! Clairvoyant detector: the likelihood ratio with `α`, `q` and `M` known.
//!
//! Only the CUT term differs between the hypotheses, so
//! `log f₁ − log f₀ = 2·Re{α*·v†Σ⁻¹z} − |α|²·v†Σ⁻¹v` with `Σ = M + qq†`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::scenario::HermitianCovariance;

fn interference(m_true: &HermitianCovariance, q_true: Option<&CVector>) -> HermitianCovariance {
    match q_true {
        Some(q) => m_true.plus_rank_one(q),
        None => m_true.clone(),
    }
}

/// Returns `(v†Σ⁻¹z, v†Σ⁻¹v)`.
fn whitened_projections(
    z_cut: &CVector,
    q_true: Option<&CVector>,
    m_true: &HermitianCovariance,
    v: &CVector,
) -> Result<(Complex64, f64)> {
    let sigma = interference(m_true, q_true);
    let sv = linalg::hpd_solve(sigma.matrix(), v)?;
    let vsv = linalg::inner(v, &sv).re;
    if !(vsv > 0.0) {
        return Err(Error::Numeric("v†Σ⁻¹v is not positive".into()));
    }
    Ok((linalg::inner(&sv, z_cut), vsv))
}

/// Log-likelihood ratio of the CUT with all parameters known.
pub fn cd_statistic(
    z_cut: &CVector,
    alpha_true: Complex64,
    q_true: Option<&CVector>,
    m_true: &HermitianCovariance,
    v: &CVector,
) -> Result<f64> {
    let (vz, vsv) = whitened_projections(z_cut, q_true, m_true, v)?;
    Ok(2.0 * (alpha_true.conj() * vz).re - alpha_true.norm_sqr() * vsv)
}

/// `Re{v†Σ⁻¹z} / √(v†Σ⁻¹v)`.
///
/// For any real positive `α` this is an increasing affine function of
/// [`cd_statistic`], and its H0 law is `N(0, 1/2)` whatever `|α|` is, so a
/// single calibrated threshold serves the whole SCNR grid.
pub fn cd_decision_statistic(
    z_cut: &CVector,
    q_true: Option<&CVector>,
    m_true: &HermitianCovariance,
    v: &CVector,
) -> Result<f64> {
    let (vz, vsv) = whitened_projections(z_cut, q_true, m_true, v)?;
    Ok(vz.re / vsv.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CMatrix};
    use approx::assert_relative_eq;

    #[test]
    fn zero_amplitude() {
        let m = HermitianCovariance::new(CMatrix::identity(3, 3)).unwrap();
        let v = crate::scenario::steering_vector(0.0, 3).unwrap();
        let z = CVector::from_element(3, Complex64::new(0.4, -2.0));
        assert_eq!(cd_statistic(&z, c(0.0), None, &m, &v).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_target() {
        let m = HermitianCovariance::new(CMatrix::identity(3, 3)).unwrap();
        let v = crate::scenario::steering_vector(0.4, 3).unwrap();
        let a = Complex64::new(1.5, -0.5);
        let z = &v * a;
        assert_relative_eq!(
            cd_statistic(&z, a, None, &m, &v).unwrap(),
            a.norm_sqr(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn decision_form_is_affine_in_llr() {
        let m = HermitianCovariance::new(CMatrix::identity(2, 2) * c(2.0)).unwrap();
        let v = crate::scenario::steering_vector(0.1, 2).unwrap();
        let q = CVector::from_vec(vec![c(3.0), Complex64::new(0.0, 3.0)]);
        let a = 0.8;
        let zs = [
            CVector::from_vec(vec![c(1.0), c(-1.0)]),
            CVector::from_vec(vec![Complex64::new(0.3, 2.0), c(0.5)]),
        ];
        let (_, vsv) = whitened_projections(&zs[0], Some(&q), &m, &v).unwrap();
        for z in &zs {
            let llr = cd_statistic(z, c(a), Some(&q), &m, &v).unwrap();
            let t = cd_decision_statistic(z, Some(&q), &m, &v).unwrap();
            assert_relative_eq!(llr, 2.0 * a * vsv.sqrt() * t - a * a * vsv, max_relative = 1e-12);
        }
    }
}
