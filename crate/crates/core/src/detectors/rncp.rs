//! Detector for a jammer modelled as a rank-one covariance component.
//!
//! With `u = M^{-1/2}q = √p·u₀`, the H1 log-likelihood (up to the common
//! `−H·log(π^N det M)`) is
//!
//! ```text
//! g(α, p, u₀) = −H·log(1 + p) + p/(1 + p)·(u₀†S_Ω u₀ + |x_α†u₀|²) − ‖x_α‖² − Tr S_Ω
//! ```
//!
//! with `x_α = x_cut − α·v₀`. It is maximized by alternating the closed-form
//! `α` step and the leading-eigenvector `(p, u₀)` step. Under H0 the
//! maximization over `q` is exact.

use num_complex::Complex64;

use super::{DetectorOutcome, IterationControl, IterationDelta, WhitenedData};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Iterate of the R-NCP-D cyclic estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RncpState {
    pub alpha: Complex64,
    pub p: f64,
    pub u0: CVector,
    /// Un-whitened jammer estimate `√p·W⁻¹u₀`.
    pub q: CVector,
    /// `g(α, p, u₀)` at this iterate.
    pub loglik: f64,
}

/// Full record of one R-NCP-D run.
#[derive(Debug, Clone)]
pub struct RncpRun {
    pub outcome: DetectorOutcome,
    pub state: RncpState,
    /// Objective after every half-step, starting from `g(α⁽⁰⁾, q⁽⁰⁾)`.
    pub objective_trace: Vec<f64>,
    /// `λ₁(S_Ω)`, an upper bound of the objective.
    pub objective_bound: f64,
    pub p_trace: Vec<f64>,
    pub u0_norm_trace: Vec<f64>,
}

/// Data-dependent part of `log max_q L₀`:
/// `−Tr(XX†) + [H·log(H/λ₁) + λ₁ − H]` when `λ₁(XX†) > H`, else `−Tr(XX†)`.
pub fn rncp_h0_core(x_all: &CMatrix) -> f64 {
    let h = x_all.ncols() as f64;
    let s = linalg::gram(x_all);
    let trace = linalg::real_trace(&s);
    let lambda = linalg::leading_eigenpair(&s).value;
    if lambda > h {
        -trace + h * (h / lambda).ln() + lambda - h
    } else {
        -trace
    }
}

/// `α = v₀†B·x / v₀†B·v₀` with `B = I − p/(1+p)·u₀u₀†`.
pub fn rncp_alpha_update(x_cut: &CVector, v0: &CVector, p: f64, u0: &CVector) -> Result<Complex64> {
    let shrink = p / (1.0 + p);
    let u0v = linalg::inner(u0, v0);
    let num = linalg::inner(v0, x_cut) - u0v.conj() * linalg::inner(u0, x_cut) * shrink;
    let den = v0.norm_squared() - shrink * u0v.norm_sqr();
    if !(den > 1e-14 * v0.norm_squared()) || !den.is_finite() {
        return Err(Error::DegenerateGeometry(
            "α update denominator vanishes (u₀ parallel to v₀ with unbounded p)".into(),
        ));
    }
    Ok(num / den)
}

/// `(p, u₀)` maximizing the objective for fixed `α`: with
/// `A = S_Ω + x_α x_α†`, `p = max(λ₁(A)/H − 1, 0)` and `u₀` the leading unit
/// eigenvector. `h` is the number of contaminated cells.
pub fn rncp_pu_update(s_omega: &CMatrix, x_alpha: &CVector, h: usize) -> (f64, CVector) {
    let a = linalg::hermitian_part(&(s_omega + x_alpha * x_alpha.adjoint()));
    let pair = linalg::leading_eigenpair(&a);
    let p = (pair.value / h as f64 - 1.0).max(0.0);
    (p, pair.vector)
}

/// Precomputed quantities shared by every iteration.
struct Problem<'a> {
    x_cut: &'a CVector,
    v0: &'a CVector,
    s_omega: CMatrix,
    trace_s_omega: f64,
    h: usize,
}

impl<'a> Problem<'a> {
    fn new(w: &'a WhitenedData) -> Self {
        let s_omega = w.s_omega();
        let trace_s_omega = linalg::real_trace(&s_omega);
        Self {
            x_cut: &w.x_cut,
            v0: &w.v0,
            s_omega,
            trace_s_omega,
            h: w.h(),
        }
    }

    fn x_alpha(&self, alpha: Complex64) -> CVector {
        self.x_cut - self.v0 * alpha
    }

    fn objective(&self, alpha: Complex64, p: f64, u0: &CVector) -> f64 {
        let xa = self.x_alpha(alpha);
        let shrink = p / (1.0 + p);
        -(self.h as f64) * p.ln_1p()
            + shrink * (linalg::quadratic_form(&self.s_omega, u0) + linalg::inner(&xa, u0).norm_sqr())
            - xa.norm_squared()
            - self.trace_s_omega
    }
}

/// Value of the H1 objective `g(α, p, u₀)` on whitened data.
pub fn rncp_objective(w: &WhitenedData, alpha: Complex64, p: f64, u0: &CVector) -> f64 {
    Problem::new(w).objective(alpha, p, u0)
}

/// Log-GLR core of R-NCP-D: `g` at the final iterate minus [`rncp_h0_core`].
///
/// `init_direction` is the (unit, un-whitened) sidelobe steering vector
/// used as `q⁽⁰⁾`.
pub fn rncp_statistic(
    w: &WhitenedData,
    init_direction: &CVector,
    control: IterationControl,
) -> Result<DetectorOutcome> {
    Ok(rncp_run(w, init_direction, control)?.outcome)
}

pub fn rncp_run(w: &WhitenedData, init_direction: &CVector, control: IterationControl) -> Result<RncpRun> {
    let prob = Problem::new(w);
    let h0 = rncp_h0_core(&w.x_all());
    let objective_bound = linalg::leading_eigenpair(&prob.s_omega).value;

    let u = &w.whitener * init_direction;
    let norm = u.norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("initial jammer direction is zero".into()));
    }
    let mut p = norm * norm;
    let mut u0 = u / c(norm);
    let mut q = init_direction.clone();
    let mut alpha = rncp_alpha_update(prob.x_cut, prob.v0, p, &u0)?;

    let mut objective_trace = vec![prob.objective(alpha, p, &u0)];
    let mut p_trace = vec![p];
    let mut u0_norm_trace = vec![u0.norm()];
    let mut iterate_trace = Vec::with_capacity(control.n_max);

    for _ in 0..control.n_max {
        let (p_next, u0_next) = rncp_pu_update(&prob.s_omega, &prob.x_alpha(alpha), prob.h);
        objective_trace.push(prob.objective(alpha, p_next, &u0_next));
        let alpha_next = rncp_alpha_update(prob.x_cut, prob.v0, p_next, &u0_next)?;
        objective_trace.push(prob.objective(alpha_next, p_next, &u0_next));

        let q_next = &w.colorer * &u0_next * c(p_next.sqrt());
        let delta = IterationDelta {
            signature: (&q_next - &q).norm(),
            amplitude: (alpha_next - alpha).norm(),
        };
        iterate_trace.push(delta);
        p_trace.push(p_next);
        u0_norm_trace.push(u0_next.norm());

        p = p_next;
        u0 = u0_next;
        q = q_next;
        alpha = alpha_next;
        if control.should_stop(&delta) {
            break;
        }
    }

    let loglik = *objective_trace.last().expect("nonempty trace");
    let iterations_run = iterate_trace.len();
    Ok(RncpRun {
        outcome: DetectorOutcome {
            statistic: loglik - h0,
            iterate_trace,
            iterations_run,
        },
        state: RncpState {
            alpha,
            p,
            u0,
            q,
            loglik,
        },
        objective_trace,
        objective_bound,
        p_trace,
        u0_norm_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cvec(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(a, b)| Complex64::new(a, b)))
    }

    fn fixture() -> WhitenedData {
        let x_cut = cvec(&[(1.0, 0.5), (-0.3, 2.0), (0.7, -1.1), (0.2, 0.2)]);
        let x_omega = CMatrix::from_fn(4, 5, |i, j| {
            Complex64::new(
                ((i + 2 * j) as f64 * 0.77).sin() * 2.0,
                ((3 * i + j) as f64 * 0.31).cos(),
            )
        });
        let v0 = cvec(&[(0.5, 0.0), (0.4, 0.3), (-0.2, 0.5), (0.1, -0.6)]);
        WhitenedData::from_white(x_cut, x_omega, v0)
    }

    #[test]
    fn h0_core_at_boundary() {
        // N = 1, H = 2, λ₁ = |a|² + |b|² = 2 = H
        let x = CMatrix::from_row_slice(1, 2, &[c(1.0), c(1.0)]);
        assert_relative_eq!(rncp_h0_core(&x), -2.0, epsilon = 1e-14);
    }

    #[test]
    fn h0_core_scalar_case() {
        let x = CMatrix::from_row_slice(1, 2, &[c(6f64.sqrt()), c(0.0)]);
        let expected = -2.0 * 3f64.ln() - 2.0;
        assert_relative_eq!(rncp_h0_core(&x), expected, epsilon = 1e-12);
    }

    #[test]
    fn alpha_update_matched_filter_cases() {
        let w = fixture();
        let mf = linalg::inner(&w.v0, &w.x_cut) / c(w.v0.norm_squared());
        let u0 = cvec(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let a = rncp_alpha_update(&w.x_cut, &w.v0, 0.0, &u0).unwrap();
        assert_relative_eq!((a - mf).norm(), 0.0, epsilon = 1e-14);

        // u₀ ⟂ v₀
        let mut perp = cvec(&[(0.3, 0.1), (1.0, 0.0), (0.2, -0.4), (0.0, 1.0)]);
        let proj = linalg::inner(&w.v0, &perp) / c(w.v0.norm_squared());
        perp -= &w.v0 * proj;
        perp /= c(perp.norm());
        let a = rncp_alpha_update(&w.x_cut, &w.v0, 37.0, &perp).unwrap();
        assert_relative_eq!((a - mf).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_update_residual_orthogonality() {
        let w = fixture();
        let u0 = cvec(&[(0.5, 0.5), (0.5, 0.0), (0.0, -0.5), (0.0, 0.0)]);
        let p = 3.7;
        let a = rncp_alpha_update(&w.x_cut, &w.v0, p, &u0).unwrap();
        let b = CMatrix::identity(4, 4) - &u0 * u0.adjoint() * c(p / (1.0 + p));
        let resid = linalg::inner(&w.v0, &(&b * (&w.x_cut - &w.v0 * a)));
        assert!(resid.norm() < 1e-10);
    }

    #[test]
    fn alpha_update_degenerate() {
        let v0 = cvec(&[(1.0, 0.0), (0.0, 0.0)]);
        let x = cvec(&[(1.0, 0.0), (1.0, 0.0)]);
        let err = rncp_alpha_update(&x, &v0, f64::INFINITY, &v0).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn pu_update_scalar_and_clamped() {
        let s = CMatrix::from_element(1, 1, c(3.0 * 4.0));
        let (p, u0) = rncp_pu_update(&s, &CVector::zeros(1), 4);
        assert_relative_eq!(p, 2.0, epsilon = 1e-14);
        assert_relative_eq!(u0[0].re, 1.0, epsilon = 1e-14);

        let s = CMatrix::identity(3, 3);
        let (p, u0) = rncp_pu_update(&s, &CVector::zeros(3), 5);
        assert_eq!(p, 0.0);
        assert_relative_eq!(u0.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pu_update_eigen_residual() {
        let w = fixture();
        let s = w.s_omega();
        let xa = w.x_cut.clone();
        let (p, u0) = rncp_pu_update(&s, &xa, w.h());
        let a = &s + &xa * xa.adjoint();
        let lambda = linalg::hermitian_eigenvalues(&a)[3];
        assert_relative_eq!(p, (lambda / w.h() as f64 - 1.0).max(0.0), max_relative = 1e-12);
        assert!((&a * &u0 - &u0 * c(lambda)).norm() < 1e-9);
    }

    #[test]
    fn objective_is_monotone_and_bounded() {
        let w = fixture();
        let init = crate::scenario::steering_from_sine(0.75, 4);
        let run = rncp_run(&w, &init, IterationControl::fixed(25)).unwrap();
        assert_eq!(run.objective_trace.len(), 2 * 25 + 1);
        for pair in run.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9 * pair[0].abs().max(1.0));
        }
        for g in &run.objective_trace[1..] {
            assert!(*g <= run.objective_bound + 1e-9);
        }
        assert!(run.p_trace.iter().all(|p| *p >= 0.0));
        for n in &run.u0_norm_trace {
            assert_relative_eq!(*n, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn early_exit_stops_before_n_max() {
        let w = fixture();
        let init = crate::scenario::steering_from_sine(0.75, 4);
        let control = IterationControl {
            n_max: 500,
            early_exit: Some(Default::default()),
        };
        let out = rncp_statistic(&w, &init, control).unwrap();
        assert!(out.iterations_run < 500);
        assert!(out.iterations_run <= control.n_max);
    }

    #[test]
    fn statistic_matches_objective_difference() {
        let w = fixture();
        let init = crate::scenario::steering_from_sine(0.75, 4);
        let run = rncp_run(&w, &init, IterationControl::fixed(10)).unwrap();
        let g = rncp_objective(&w, run.state.alpha, run.state.p, &run.state.u0);
        assert_relative_eq!(
            run.outcome.statistic,
            g - rncp_h0_core(&w.x_all()),
            max_relative = 1e-12
        );
        assert_eq!(run.outcome.iterations_run, 10);
    }
}
