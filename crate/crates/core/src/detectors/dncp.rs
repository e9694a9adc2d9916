//! Detector for a jammer modelled as a deterministic signature `q` with an
//! unknown amplitude in every contaminated cell.
//!
//! After maximizing over the target amplitude the H1 likelihood is
//! `exp(−h(u, β, βᵢ))` with
//!
//! ```text
//! h = (x_cut − β·u)†P⊥(x_cut − β·u) + Σᵢ ‖xᵢ − βᵢ·u‖²,   P⊥ = I − v₀v₀†/v₀†v₀
//! ```
//!
//! which is minimized by alternating exact minimizations over `u` and over
//! the amplitudes.

use num_complex::Complex64;

use super::{DetectorOutcome, IterationControl, IterationDelta, WhitenedData};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

#[derive(Debug, Clone, PartialEq)]
pub struct DncpState {
    pub u: CVector,
    pub beta: Complex64,
    pub beta_omega: CVector,
    pub h_value: f64,
}

#[derive(Debug, Clone)]
pub struct DncpRun {
    pub outcome: DetectorOutcome,
    pub state: DncpState,
    /// `h` after the initial amplitude fit and after every half-step.
    pub h_trace: Vec<f64>,
    /// True if a degenerate update cut the iteration short.
    pub stopped_on_degeneracy: bool,
}

/// `P⊥_{v₀}·y`.
pub fn project_out(v0: &CVector, y: &CVector) -> CVector {
    y - v0 * (linalg::inner(v0, y) / c(v0.norm_squared()))
}

/// `λ₁(S₁) − Tr(S₁)`, `S₁ = x_cut x_cut† + Σ xᵢxᵢ†`. Never positive.
pub fn dncp_h0_core(x_all: &CMatrix) -> f64 {
    let s1 = linalg::gram(x_all);
    linalg::leading_eigenpair(&s1).value - linalg::real_trace(&s1)
}

pub fn dncp_h_value(
    u: &CVector,
    beta: Complex64,
    beta_omega: &CVector,
    x_cut: &CVector,
    x_omega: &CMatrix,
    v0: &CVector,
) -> f64 {
    let cut = project_out(v0, &(x_cut - u * beta)).norm_squared();
    let omega: f64 = x_omega
        .column_iter()
        .zip(beta_omega.iter())
        .map(|(x, b)| (x - u * *b).norm_squared())
        .sum();
    cut + omega
}

/// Minimizer of `h` over `u` for fixed amplitudes:
/// `u = (|β|²P⊥ + Σ|βᵢ|²·I)⁻¹ (β*·P⊥x_cut + Σ βᵢ*·xᵢ)`.
///
/// When every `βᵢ` vanishes the system is singular along `v₀`; the
/// minimum-norm solution `P⊥x_cut/β` is returned if it is nonzero.
pub fn dncp_u_update(
    x_cut: &CVector,
    x_omega: &CMatrix,
    v0: &CVector,
    beta: Complex64,
    beta_omega: &CVector,
) -> Result<CVector> {
    let cut_weight = beta.norm_sqr();
    let omega_weight: f64 = beta_omega.iter().map(|b| b.norm_sqr()).sum();
    let px = project_out(v0, x_cut);
    let mut rhs = &px * beta.conj();
    for (x, b) in x_omega.column_iter().zip(beta_omega.iter()) {
        rhs += x * b.conj();
    }
    if omega_weight > 0.0 {
        // (s·I + b·P⊥)⁻¹ = P_v₀/s + P⊥/(s + b)
        let perp = project_out(v0, &rhs);
        let along = &rhs - &perp;
        return Ok(along / c(omega_weight) + perp / c(omega_weight + cut_weight));
    }
    if cut_weight > 0.0 {
        let u = px / beta;
        if u.norm() > 1e-14 * x_cut.norm().max(f64::MIN_POSITIVE) {
            return Ok(u);
        }
    }
    Err(Error::SingularUpdate(
        "all jammer amplitudes vanish on the fitted subspace".into(),
    ))
}

/// Least-squares amplitudes for fixed `u`:
/// `β = u†P⊥x_cut / u†P⊥u`, `βᵢ = u†xᵢ / u†u`.
pub fn dncp_beta_update(u: &CVector, x_cut: &CVector, x_omega: &CMatrix, v0: &CVector) -> Result<(Complex64, CVector)> {
    let uu = u.norm_squared();
    if !(uu > 0.0) {
        return Err(Error::DegenerateGeometry("jammer signature estimate is zero".into()));
    }
    let pu = project_out(v0, u);
    let den = pu.norm_squared();
    if !(den > 1e-12 * uu) {
        return Err(Error::DegenerateGeometry(
            "jammer signature estimate is parallel to the target steering vector".into(),
        ));
    }
    let beta = linalg::inner(&pu, x_cut) / den;
    let beta_omega = CVector::from_iterator(x_omega.ncols(), x_omega.column_iter().map(|x| u.dotc(&x) / uu));
    Ok((beta, beta_omega))
}

/// Log-GLR core of D-NCP-D: `−h` at the final iterate minus
/// [`dncp_h0_core`].
pub fn dncp_statistic(
    w: &WhitenedData,
    init_direction: &CVector,
    control: IterationControl,
) -> Result<DetectorOutcome> {
    Ok(dncp_run(w, init_direction, control)?.outcome)
}

pub fn dncp_run(w: &WhitenedData, init_direction: &CVector, control: IterationControl) -> Result<DncpRun> {
    let (x_cut, x_omega, v0) = (&w.x_cut, &w.x_omega, &w.v0);
    let h0 = dncp_h0_core(&w.x_all());
    let h_of = |u: &CVector, b: Complex64, bo: &CVector| dncp_h_value(u, b, bo, x_cut, x_omega, v0);

    let mut u = &w.whitener * init_direction;
    let (mut beta, mut beta_omega) = dncp_beta_update(&u, x_cut, x_omega, v0)?;
    let mut h_trace = vec![h_of(&u, beta, &beta_omega)];
    let mut iterate_trace = Vec::with_capacity(control.n_max);
    let mut stopped_on_degeneracy = false;

    for _ in 0..control.n_max {
        let u_next = match dncp_u_update(x_cut, x_omega, v0, beta, &beta_omega) {
            Ok(u) => u,
            Err(Error::SingularUpdate(_)) => {
                // converged: nothing left to fit
                stopped_on_degeneracy = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let (beta_next, beta_omega_next) = match dncp_beta_update(&u_next, x_cut, x_omega, v0) {
            Ok(b) => b,
            Err(Error::DegenerateGeometry(_)) => {
                stopped_on_degeneracy = true;
                break;
            }
            Err(e) => return Err(e),
        };
        h_trace.push(h_of(&u_next, beta, &beta_omega));
        h_trace.push(h_of(&u_next, beta_next, &beta_omega_next));

        let delta = IterationDelta {
            signature: (&u_next - &u).norm(),
            amplitude: (beta_next - beta).norm(),
        };
        iterate_trace.push(delta);
        u = u_next;
        beta = beta_next;
        beta_omega = beta_omega_next;
        if control.should_stop(&delta) {
            break;
        }
    }

    let h_value = *h_trace.last().expect("nonempty trace");
    let iterations_run = iterate_trace.len();
    Ok(DncpRun {
        outcome: DetectorOutcome {
            statistic: -h_value - h0,
            iterate_trace,
            iterations_run,
        },
        state: DncpState {
            u,
            beta,
            beta_omega,
            h_value,
        },
        h_trace,
        stopped_on_degeneracy,
    })
}
