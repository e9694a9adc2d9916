//! Physical model and trial-data synthesis.
//!
//! The array is a half-wavelength ULA. Clutter-plus-noise covariance is
//! `σₙ²·I + p_c·M_c` with an exponentially correlated `M_c(i, j) = ρ^|i−j|`.
//! The noise-cover-pulse jammer enters as a rank-one term `q·q†` on the cell
//! under test and the `H − 1` contaminated neighbours, never on the training
//! cells.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// All physical and experimental parameters of a detection scenario.
///
/// `Default` gives the reference setup (N = 8, H₁ = H₂ = 10, CNR 20 dB,
/// JNR 30 dB, jammer at 35°, ρ = 0.9) with K = 12 and a desk-scale
/// false-alarm probability of 1e−2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_antennas: usize,
    pub k_secondary: usize,
    pub h_left: usize,
    pub h_right: usize,
    pub noise_power: f64,
    pub cnr_db: f64,
    pub jnr_db: f64,
    pub clutter_rho: f64,
    pub jammer_azimuth_deg: f64,
    /// Draw the jammer azimuth per trial, uniformly in sine space outside
    /// the mainlobe, instead of using `jammer_azimuth_deg`.
    pub jammer_azimuth_random: bool,
    pub target_azimuth_deg: f64,
    pub jammer_present: bool,
    pub pfa: f64,
    pub scnr_grid_db: Vec<f64>,
    pub max_iterations: usize,
    pub rng_seed: u64,
    /// Sine-space offset from the target direction used to initialise the
    /// cyclic estimators. `None` means three null-to-null beamwidths (6/N).
    pub init_sin_offset: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_antennas: 8,
            k_secondary: 12,
            h_left: 10,
            h_right: 10,
            noise_power: 1.0,
            cnr_db: 20.0,
            jnr_db: 30.0,
            clutter_rho: 0.9,
            jammer_azimuth_deg: 35.0,
            jammer_azimuth_random: false,
            target_azimuth_deg: 0.0,
            jammer_present: true,
            pfa: 1e-2,
            scnr_grid_db: default_scnr_grid(),
            max_iterations: 10,
            rng_seed: 0,
            init_sin_offset: None,
        }
    }
}

/// 0 dB to 40 dB in 2 dB steps.
pub fn default_scnr_grid() -> Vec<f64> {
    (0..=20).map(|k| 2.0 * k as f64).collect()
}

impl ScenarioConfig {
    /// Number of NCP-contaminated cells, CUT included.
    pub fn h_total(&self) -> usize {
        self.h_left + self.h_right + 1
    }

    pub fn clutter_power(&self) -> f64 {
        self.noise_power * db_to_linear(self.cnr_db)
    }

    pub fn jammer_power(&self) -> f64 {
        self.noise_power * db_to_linear(self.jnr_db)
    }

    pub fn target_azimuth(&self) -> f64 {
        self.target_azimuth_deg.to_radians()
    }

    pub fn init_sin_offset(&self) -> f64 {
        self.init_sin_offset.unwrap_or(6.0 / self.n_antennas as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::validation("n_antennas", "must be positive"));
        }
        if self.k_secondary < self.n_antennas {
            return Err(Error::validation(
                "k_secondary",
                format!(
                    "k_secondary ≥ n_antennas required ({} < {})",
                    self.k_secondary, self.n_antennas
                ),
            ));
        }
        if self.h_total() < 2 {
            return Err(Error::validation("h_left", "h_left + h_right + 1 must be at least 2"));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(Error::validation("noise_power", "must be positive and finite"));
        }
        if !self.cnr_db.is_finite() {
            return Err(Error::validation("cnr_db", "must be finite"));
        }
        if !self.jnr_db.is_finite() {
            return Err(Error::validation("jnr_db", "must be finite"));
        }
        if !(0.0..1.0).contains(&self.clutter_rho) {
            return Err(Error::validation("clutter_rho", "must lie in [0, 1)"));
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::validation("pfa", "must lie in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(Error::validation("max_iterations", "must be positive"));
        }
        if self.scnr_grid_db.iter().any(|x| x.is_nan()) {
            return Err(Error::validation("scnr_grid_db", "contains NaN"));
        }
        if !self.jammer_azimuth_deg.is_finite() {
            return Err(Error::validation("jammer_azimuth_deg", "must be finite"));
        }
        if !self.target_azimuth_deg.is_finite() {
            return Err(Error::validation("target_azimuth_deg", "must be finite"));
        }
        if let Some(off) = self.init_sin_offset {
            if !(off.is_finite() && off > 0.0) {
                return Err(Error::validation("init_sin_offset", "must be positive and finite"));
            }
        }
        if self.jammer_azimuth_random && sidelobe_measure(self.target_azimuth(), self.n_antennas) <= 0.0 {
            return Err(Error::validation(
                "jammer_azimuth_random",
                "the mainlobe covers all of sine space for this array",
            ));
        }
        Ok(())
    }
}

/// A validated Hermitian positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCovariance(CMatrix);

impl HermitianCovariance {
    pub const HERMITIAN_TOL: f64 = 1e-12;

    /// Accepts `m` if it is Hermitian within 1e−12 per entry and admits a
    /// Cholesky factor.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidArgument("covariance must be square and nonempty".into()));
        }
        if linalg::hermitian_defect(&m) > Self::HERMITIAN_TOL {
            return Err(Error::Numeric("covariance is not Hermitian".into()));
        }
        let m = linalg::hermitian_part(&m);
        linalg::cholesky_factor(&m)?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `self + q·q†`.
    pub fn plus_rank_one(&self, q: &CVector) -> HermitianCovariance {
        HermitianCovariance(linalg::hermitian_part(&(&self.0 + q * q.adjoint())))
    }
}

/// Unit-norm ULA response `exp(jπk·sin θ)/√n`, `k = 0..n−1`.
pub fn steering_vector(theta: f64, n: usize) -> Result<CVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("steering vector length must be positive".into()));
    }
    Ok(steering_from_sine(theta.sin(), n))
}

pub(crate) fn steering_from_sine(s: f64, n: usize) -> CVector {
    let scale = (n as f64).sqrt().recip();
    CVector::from_fn(n, |k, _| Complex64::from_polar(scale, PI * k as f64 * s))
}

/// Clutter-plus-noise covariance `σₙ²·I + p_c·M_c`, `M_c(i, j) = ρ^|i−j|`.
pub fn clutter_covariance(cfg: &ScenarioConfig) -> Result<HermitianCovariance> {
    let rho = cfg.clutter_rho;
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("clutter_rho = {rho} outside [0, 1)")));
    }
    let n = cfg.n_antennas;
    let pc = cfg.clutter_power();
    let m = CMatrix::from_fn(n, n, |i, j| {
        let lag = i.abs_diff(j) as i32;
        let noise = if i == j { cfg.noise_power } else { 0.0 };
        c(noise + pc * rho.powi(lag))
    });
    HermitianCovariance::new(m)
}

/// Jammer signature scaled so every antenna sees power `p_j`.
pub fn jammer_signature(cfg: &ScenarioConfig, azimuth: f64) -> CVector {
    let n = cfg.n_antennas;
    steering_from_sine(azimuth.sin(), n) * c((n as f64 * cfg.jammer_power()).sqrt())
}

/// Target amplitude giving the requested SCNR `|α|²·v†M⁻¹v`.
pub fn scnr_to_amplitude(scnr_db: f64, v: &CVector, m: &HermitianCovariance) -> Result<f64> {
    let gain = linalg::hpd_solve(m.matrix(), v)?;
    let vmv = linalg::inner(v, &gain).re;
    if !(vmv > 0.0) {
        return Err(Error::Numeric("v†M⁻¹v is not positive".into()));
    }
    Ok((db_to_linear(scnr_db) / vmv).sqrt())
}

/// Circular complex Gaussian with a fixed covariance, coloured through a
/// lower-triangular factor.
#[derive(Debug, Clone)]
pub struct ComplexGaussian {
    factor: CMatrix,
}

impl ComplexGaussian {
    pub fn new(cov: &HermitianCovariance) -> Result<Self> {
        Ok(Self {
            factor: linalg::cholesky_factor(cov.matrix())?,
        })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// One zero-mean draw.
    pub fn sample_zero_mean<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let w = white_cn(self.dim(), rng);
        &self.factor * w
    }

    pub fn sample<R: Rng + ?Sized>(&self, mean: &CVector, rng: &mut R) -> CVector {
        mean + self.sample_zero_mean(rng)
    }

    /// `cols` independent zero-mean draws as columns.
    pub fn sample_matrix<R: Rng + ?Sized>(&self, cols: usize, rng: &mut R) -> CMatrix {
        let n = self.dim();
        let w = CMatrix::from_fn(n, cols, |_, _| unit_cn(rng));
        &self.factor * w
    }
}

fn unit_cn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn white_cn<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| unit_cn(rng))
}

/// One draw from `CN(mean, cov)`.
pub fn sample_cn<R: Rng + ?Sized>(mean: &CVector, cov: &HermitianCovariance, rng: &mut R) -> Result<CVector> {
    if mean.len() != cov.dim() {
        return Err(Error::InvalidArgument("mean and covariance dimensions differ".into()));
    }
    Ok(ComplexGaussian::new(cov)?.sample(mean, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    /// Target present at the given SCNR.
    H1 {
        scnr_db: f64,
    },
}

/// Ground truth carried alongside synthesized data.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub hypothesis: Hypothesis,
    /// Target amplitude (zero under H0).
    pub alpha: Complex64,
    /// Jammer signature, `None` when the jammer is off.
    pub q: Option<CVector>,
    pub jammer_azimuth: Option<f64>,
}

/// One trial's primary and secondary data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Return from the cell under test.
    pub z_cut: CVector,
    /// The `H − 1` NCP-contaminated neighbours, one per column.
    pub z_omega: CMatrix,
    /// `K` training vectors, one per column.
    pub r_secondary: CMatrix,
    pub truth: Truth,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.z_cut.len()
    }

    /// `[z_cut  Z_Ω]`.
    pub fn primary(&self) -> CMatrix {
        let n = self.n();
        let mut z = CMatrix::zeros(n, self.z_omega.ncols() + 1);
        z.set_column(0, &self.z_cut);
        z.columns_mut(1, self.z_omega.ncols()).copy_from(&self.z_omega);
        z
    }
}

/// Length of the sidelobe region `|s − sin θ_T| ≥ 2/N` within `[−1, 1]`.
fn sidelobe_measure(target: f64, n: usize) -> f64 {
    let (lo, hi) = mainlobe_bounds(target, n);
    (lo + 1.0) + (1.0 - hi)
}

fn mainlobe_bounds(target: f64, n: usize) -> (f64, f64) {
    let s = target.sin();
    let half = 2.0 / n as f64;
    ((s - half).max(-1.0), (s + half).min(1.0))
}

/// Azimuth with `sin θ` uniform on the complement of the mainlobe
/// `|sin θ − sin θ_T| < 2/N`.
pub fn random_sidelobe_azimuth<R: Rng + ?Sized>(target: f64, n: usize, rng: &mut R) -> Result<f64> {
    let (lo, hi) = mainlobe_bounds(target, n);
    let left = lo + 1.0;
    let total = left + (1.0 - hi);
    if total <= 0.0 {
        return Err(Error::InvalidArgument("no sidelobe region for this array".into()));
    }
    let u = rng.random::<f64>() * total;
    let s = if u < left { -1.0 + u } else { hi + (u - left) };
    Ok(s.clamp(-1.0, 1.0).asin())
}

/// Sine of the sidelobe direction used to seed the cyclic estimators.
pub fn init_sidelobe_sine(cfg: &ScenarioConfig) -> f64 {
    let s_t = cfg.target_azimuth().sin();
    let off = cfg.init_sin_offset();
    if s_t + off <= 1.0 {
        s_t + off
    } else if s_t - off >= -1.0 {
        s_t - off
    } else {
        -1.0
    }
}

/// Deterministic parts of a scenario, built once and reused across trials.
#[derive(Debug, Clone)]
pub struct Scenario {
    cfg: ScenarioConfig,
    m: HermitianCovariance,
    clutter: ComplexGaussian,
    target_steering: CVector,
    fixed_jammer: Option<(f64, CVector, ComplexGaussian)>,
}

impl Scenario {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let m = clutter_covariance(cfg)?;
        let clutter = ComplexGaussian::new(&m)?;
        let target_steering = steering_vector(cfg.target_azimuth(), cfg.n_antennas)?;
        let fixed_jammer = if cfg.jammer_present && !cfg.jammer_azimuth_random {
            let az = cfg.jammer_azimuth_deg.to_radians();
            let q = jammer_signature(cfg, az);
            let dist = ComplexGaussian::new(&m.plus_rank_one(&q))?;
            Some((az, q, dist))
        } else {
            None
        };
        Ok(Self {
            cfg: cfg.clone(),
            m,
            clutter,
            target_steering,
            fixed_jammer,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn covariance(&self) -> &HermitianCovariance {
        &self.m
    }

    pub fn target_steering(&self) -> &CVector {
        &self.target_steering
    }

    /// Unit steering vector from the sidelobe initialisation direction.
    pub fn init_steering(&self) -> CVector {
        steering_from_sine(init_sidelobe_sine(&self.cfg), self.cfg.n_antennas)
    }

    pub fn amplitude(&self, scnr_db: f64) -> Result<f64> {
        scnr_to_amplitude(scnr_db, &self.target_steering, &self.m)
    }

    /// Draws one trial. Random draws happen in a fixed order: jammer azimuth
    /// (if random), CUT, Ω-window columns, training columns.
    pub fn synthesize<R: Rng + ?Sized>(&self, hypothesis: Hypothesis, rng: &mut R) -> Result<Dataset> {
        let cfg = &self.cfg;
        let n = cfg.n_antennas;
        let alpha = match hypothesis {
            Hypothesis::H0 => Complex64::new(0.0, 0.0),
            Hypothesis::H1 { scnr_db } => c(self.amplitude(scnr_db)?),
        };

        let random_jammer;
        let (jammer_azimuth, q, primary) = if !cfg.jammer_present {
            (None, None, &self.clutter)
        } else if let Some((az, q, dist)) = &self.fixed_jammer {
            (Some(*az), Some(q.clone()), dist)
        } else {
            let az = random_sidelobe_azimuth(cfg.target_azimuth(), n, rng)?;
            let q = jammer_signature(cfg, az);
            random_jammer = ComplexGaussian::new(&self.m.plus_rank_one(&q))?;
            (Some(az), Some(q), &random_jammer)
        };

        let mean = &self.target_steering * alpha;
        let z_cut = primary.sample(&mean, rng);
        let z_omega = primary.sample_matrix(cfg.h_total() - 1, rng);
        let r_secondary = self.clutter.sample_matrix(cfg.k_secondary, rng);

        Ok(Dataset {
            z_cut,
            z_omega,
            r_secondary,
            truth: Truth {
                hypothesis,
                alpha,
                q,
                jammer_azimuth,
            },
        })
    }
}

/// Builds the scenario and draws a single trial.
pub fn synthesize_dataset<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<Dataset> {
    Scenario::new(cfg)?.synthesize(hypothesis, rng)
}
