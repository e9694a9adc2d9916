//! Detector front end and decision statistics.
//!
//! Every adaptive detector works on data whitened by the training-data
//! covariance estimate. The statistics are log-likelihood-ratio cores: the
//! `[π^N det M]^H` normalisation shared by both hypotheses is never formed.

pub mod amf;
pub mod clairvoyant;
pub mod dncp;
pub mod rncp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::scenario::{Dataset, HermitianCovariance, Scenario};

/// Largest accepted condition number of the sample covariance.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Likelihood ratio with every parameter known.
    Cd,
    /// Jammer modelled as a rank-one covariance component.
    Rncp,
    /// Jammer modelled as a deterministic signature with per-cell amplitudes.
    Dncp,
    /// Adaptive matched filter.
    Amf,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::Cd,
        DetectorKind::Rncp,
        DetectorKind::Dncp,
        DetectorKind::Amf,
    ];

    /// Short identifier used on the command line and in file names.
    pub fn id(self) -> &'static str {
        match self {
            DetectorKind::Cd => "cd",
            DetectorKind::Rncp => "rncp",
            DetectorKind::Dncp => "dncp",
            DetectorKind::Amf => "amf",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DetectorKind::Cd => "CD",
            DetectorKind::Rncp => "R-NCP-D",
            DetectorKind::Dncp => "D-NCP-D",
            DetectorKind::Amf => "AMF",
        }
    }

    pub fn is_iterative(self) -> bool {
        matches!(self, DetectorKind::Rncp | DetectorKind::Dncp)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cd" | "clairvoyant" => Ok(DetectorKind::Cd),
            "rncp" | "r-ncp-d" => Ok(DetectorKind::Rncp),
            "dncp" | "d-ncp-d" => Ok(DetectorKind::Dncp),
            "amf" => Ok(DetectorKind::Amf),
            other => Err(Error::InvalidArgument(format!("unknown detector '{other}'"))),
        }
    }
}

/// Change between consecutive iterates of a cyclic estimator.
///
/// For R-NCP-D `signature` is `‖q⁽ⁿ⁾ − q⁽ⁿ⁻¹⁾‖` and `amplitude` is
/// `|α⁽ⁿ⁾ − α⁽ⁿ⁻¹⁾|`; for D-NCP-D they are `‖u⁽ⁿ⁾ − u⁽ⁿ⁻¹⁾‖` and
/// `|β⁽ⁿ⁾ − β⁽ⁿ⁻¹⁾|`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationDelta {
    pub signature: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutcome {
    pub statistic: f64,
    pub iterate_trace: Vec<IterationDelta>,
    pub iterations_run: usize,
}

/// Stopping rule for the cyclic estimators: always at most `n_max`
/// iterations, optionally earlier once both deltas drop below the
/// tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationControl {
    pub n_max: usize,
    pub early_exit: Option<Tolerances>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub signature: f64,
    pub amplitude: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            signature: 1e-6,
            amplitude: 1e-6,
        }
    }
}

impl IterationControl {
    pub fn fixed(n_max: usize) -> Self {
        Self {
            n_max,
            early_exit: None,
        }
    }

    pub(crate) fn should_stop(&self, delta: &IterationDelta) -> bool {
        self.early_exit
            .is_some_and(|t| delta.signature < t.signature && delta.amplitude < t.amplitude)
    }
}

impl Default for IterationControl {
    fn default() -> Self {
        Self::fixed(10)
    }
}

/// `M̂ = R·R†/K`.
///
/// Fails with [`Error::DegenerateTraining`] when `K < N` or the estimate has
/// condition number above [`MAX_CONDITION`].
pub fn sample_covariance(r_secondary: &CMatrix) -> Result<HermitianCovariance> {
    let (n, k) = r_secondary.shape();
    if n == 0 || k < n {
        return Err(Error::DegenerateTraining(format!(
            "need K ≥ N training vectors, got K = {k}, N = {n}"
        )));
    }
    let m = linalg::gram(r_secondary) / c(k as f64);
    let eig = linalg::hermitian_eigenvalues(&m);
    let (lo, hi) = (eig[0], eig[n - 1]);
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::DegenerateTraining(format!(
            "sample covariance is ill-conditioned (λ_min = {lo:e}, λ_max = {hi:e})"
        )));
    }
    HermitianCovariance::new(m).map_err(|e| Error::DegenerateTraining(e.to_string()))
}

/// How the whitening matrix `W` (with `W·M̂·W† = I`) is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WhitenerKind {
    /// Inverse of the lower Cholesky factor.
    #[default]
    Cholesky,
    /// Hermitian inverse square root.
    InverseSqrt,
}

/// Data after the substitution `x = W·z`.
#[derive(Debug, Clone)]
pub struct WhitenedData {
    pub x_cut: CVector,
    pub x_omega: CMatrix,
    pub v0: CVector,
    pub whitener: CMatrix,
    /// `W⁻¹`, used to map whitened jammer estimates back to the array.
    pub colorer: CMatrix,
}

impl WhitenedData {
    pub fn n(&self) -> usize {
        self.x_cut.len()
    }

    /// Number of contaminated cells, CUT included.
    pub fn h(&self) -> usize {
        self.x_omega.ncols() + 1
    }

    /// `[x_cut  X_Ω]`.
    pub fn x_all(&self) -> CMatrix {
        let mut x = CMatrix::zeros(self.n(), self.h());
        x.set_column(0, &self.x_cut);
        x.columns_mut(1, self.h() - 1).copy_from(&self.x_omega);
        x
    }

    /// `S_Ω = X_Ω·X_Ω†`.
    pub fn s_omega(&self) -> CMatrix {
        linalg::gram(&self.x_omega)
    }

    /// Whitened data built directly from already-white quantities, with
    /// `W = I`.
    pub fn from_white(x_cut: CVector, x_omega: CMatrix, v0: CVector) -> Self {
        let n = x_cut.len();
        Self {
            x_cut,
            x_omega,
            v0,
            whitener: CMatrix::identity(n, n),
            colorer: CMatrix::identity(n, n),
        }
    }
}

pub fn whiten(m_hat: &HermitianCovariance, dataset: &Dataset, v: &CVector) -> Result<WhitenedData> {
    whiten_with(m_hat, dataset, v, WhitenerKind::Cholesky)
}

pub fn whiten_with(
    m_hat: &HermitianCovariance,
    dataset: &Dataset,
    v: &CVector,
    kind: WhitenerKind,
) -> Result<WhitenedData> {
    let n = m_hat.dim();
    if dataset.n() != n || v.len() != n {
        return Err(Error::InvalidArgument("data and covariance dimensions differ".into()));
    }
    let (whitener, colorer) = match kind {
        WhitenerKind::Cholesky => {
            let l = linalg::cholesky_factor(m_hat.matrix())?;
            (linalg::lower_triangular_inverse(&l)?, l)
        }
        WhitenerKind::InverseSqrt => {
            let w = linalg::inverse_sqrt(m_hat.matrix())?;
            let inv = w
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Numeric("whitener is singular".into()))?;
            (w, inv)
        }
    };
    Ok(WhitenedData {
        x_cut: &whitener * &dataset.z_cut,
        x_omega: &whitener * &dataset.z_omega,
        v0: &whitener * v,
        whitener,
        colorer,
    })
}

/// Evaluates several detectors on one dataset, sharing the covariance
/// estimate and whitening between the adaptive ones.
///
/// The clairvoyant entry is [`clairvoyant::cd_decision_statistic`], the
/// phase-aligned form whose null distribution does not depend on `|α|`.
pub fn evaluate(
    kinds: &[DetectorKind],
    dataset: &Dataset,
    scenario: &Scenario,
    control: IterationControl,
) -> Result<Vec<DetectorOutcome>> {
    let v = scenario.target_steering();
    let needs_whitening = kinds.iter().any(|k| *k != DetectorKind::Cd);
    let whitened = if needs_whitening {
        let m_hat = sample_covariance(&dataset.r_secondary)?;
        Some(whiten(&m_hat, dataset, v)?)
    } else {
        None
    };
    let init = scenario.init_steering();
    kinds
        .iter()
        .map(|kind| {
            let w = whitened.as_ref();
            match kind {
                DetectorKind::Cd => Ok(single(clairvoyant::cd_decision_statistic(
                    &dataset.z_cut,
                    dataset.truth.q.as_ref(),
                    scenario.covariance(),
                    v,
                )?)),
                DetectorKind::Amf => Ok(single(amf::amf_from_whitened(w.expect("whitened")))),
                DetectorKind::Rncp => rncp::rncp_statistic(w.expect("whitened"), &init, control),
                DetectorKind::Dncp => dncp::dncp_statistic(w.expect("whitened"), &init, control),
            }
        })
        .collect()
}

fn single(statistic: f64) -> DetectorOutcome {
    DetectorOutcome {
        statistic,
        iterate_trace: Vec::new(),
        iterations_run: 0,
    }
}
