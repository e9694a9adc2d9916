//! Threshold calibration, detection-probability sweeps and convergence
//! profiles.
//!
//! Every trial draws from its own ChaCha stream keyed by
//! `(seed, phase, grid point, trial index)`, and all detectors of a run see
//! the same trial data. Results are gathered by trial index, so serial and
//! parallel execution agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::detectors::{self, DetectorKind, IterationControl, IterationDelta};
use crate::error::{Error, Result};
use crate::scenario::{Hypothesis, Scenario, ScenarioConfig};

/// Which part of an experiment a trial belongs to. Distinct phases draw
/// from disjoint random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Calibrate,
    Detect,
    Validate,
    Converge,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Calibrate => 0x6361_6c69,
            Phase::Detect => 0x6465_7465,
            Phase::Validate => 0x7661_6c69,
            Phase::Converge => 0x636f_6e76,
        }
    }
}

/// Random stream for one trial.
pub fn trial_rng(seed: u64, phase: Phase, point: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&phase.tag().to_le_bytes());
    key[16..24].copy_from_slice(&point.to_le_bytes());
    key[24..].copy_from_slice(b"ncp-mc\0\0");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Runs independent trials, optionally on a bounded thread pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Executor {
    /// `None` uses every available core; `Some(1)` runs serially.
    pub workers: Option<usize>,
}

impl Executor {
    pub fn serial() -> Self {
        Self { workers: Some(1) }
    }

    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers: Some(workers.max(1)),
        }
    }

    /// `f(0), …, f(n−1)` in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self.workers != Some(1) {
                let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
                return match self.workers {
                    None => run(),
                    Some(k) => rayon::ThreadPoolBuilder::new()
                        .num_threads(k)
                        .build()
                        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
                        .install(run),
                };
            }
        }
        (0..n).map(f).collect()
    }
}

/// Calibrated threshold for one detector, with the null sample behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTable {
    pub detector: DetectorKind,
    pub threshold: f64,
    pub n_trials: usize,
    pub target_pfa: f64,
    /// Fraction of the calibration sample strictly above the threshold.
    pub empirical_pfa: f64,
    #[serde(skip)]
    pub null_statistics: Vec<f64>,
}

/// Default calibration size `⌈100/pfa⌉`.
pub fn default_calibration_trials(pfa: f64) -> usize {
    (100.0 / pfa - 1e-9).ceil() as usize
}

/// Number of order statistics at or above the threshold: `⌈n·pfa⌉`, with a
/// small guard against `n·pfa` landing a rounding error above an integer.
fn quantile_rank(n: usize, pfa: f64) -> usize {
    let x = n as f64 * pfa;
    let m = (x - 1e-9 * x.max(1.0)).ceil() as usize;
    m.clamp(1, n)
}

/// Sets `η` to the `m`-th largest statistic, `m = ⌈n·pfa⌉`. With the strict
/// rule `statistic > η` the calibration-sample false-alarm rate is at most
/// `pfa`. Returns `(η, empirical_pfa)`.
pub fn threshold_from_null(statistics: &[f64], pfa: f64) -> Result<(f64, f64)> {
    let n = statistics.len();
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::InvalidArgument(format!("pfa = {pfa} outside (0, 1)")));
    }
    if n == 0 || (n as f64) * pfa < 1.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "{n} calibration trials cannot resolve pfa = {pfa}; need at least {}",
            (1.0 / pfa - 1e-9).ceil()
        )));
    }
    if statistics.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN detector statistic".into()));
    }
    let mut sorted = statistics.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let eta = sorted[quantile_rank(n, pfa) - 1];
    let above = sorted.iter().take_while(|&&s| s > eta).count();
    Ok((eta, above as f64 / n as f64))
}

/// Detection estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdEstimate {
    pub pd: f64,
    pub std_err: f64,
    pub n_trials: usize,
}

pub fn binomial_std_err(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Fraction of statistics strictly above `threshold`.
pub fn pd_from_statistics(statistics: &[f64], threshold: f64) -> PdEstimate {
    let n = statistics.len();
    let hits = statistics.iter().filter(|&&s| s > threshold).count();
    let pd = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    PdEstimate {
        pd,
        std_err: binomial_std_err(pd, n),
        n_trials: n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdCurve {
    pub detector: DetectorKind,
    pub scnr_db: Vec<f64>,
    pub pd: Vec<f64>,
    pub n_trials: Vec<usize>,
    pub std_err: Vec<f64>,
}

impl PdCurve {
    pub fn point(&self, i: usize) -> PdEstimate {
        PdEstimate {
            pd: self.pd[i],
            std_err: self.std_err[i],
            n_trials: self.n_trials[i],
        }
    }

    /// First grid SCNR where `pd ≥ level`.
    pub fn first_crossing(&self, level: f64) -> Option<(usize, f64)> {
        self.pd.iter().position(|&p| p >= level).map(|i| (i, self.scnr_db[i]))
    }
}

/// Mean iterate change per iteration of a cyclic estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceProfile {
    pub detector: DetectorKind,
    pub mean_signature_delta: Vec<f64>,
    pub mean_amplitude_delta: Vec<f64>,
    pub n_trials: usize,
}

/// Statistics of `kinds` (in order) on one freshly drawn trial.
pub fn trial_statistics(
    scenario: &Scenario,
    kinds: &[DetectorKind],
    hypothesis: Hypothesis,
    control: IterationControl,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let data = scenario.synthesize(hypothesis, rng)?;
    Ok(detectors::evaluate(kinds, &data, scenario, control)?
        .into_iter()
        .map(|o| o.statistic)
        .collect())
}

/// Runs `n_trials` trials of one phase and returns statistics indexed
/// `[detector][trial]`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_statistics(
    scenario: &Scenario,
    kinds: &[DetectorKind],
    hypothesis: Hypothesis,
    phase: Phase,
    point: u64,
    n_trials: usize,
    seed: u64,
    executor: Executor,
) -> Result<Vec<Vec<f64>>> {
    let control = IterationControl::fixed(scenario.config().max_iterations);
    let rows = executor.map(n_trials, |t| {
        let mut rng = trial_rng(seed, phase, point, t as u64);
        trial_statistics(scenario, kinds, hypothesis, control, &mut rng)
    })?;
    let mut by_detector = vec![Vec::with_capacity(n_trials); kinds.len()];
    for row in rows {
        for (col, s) in by_detector.iter_mut().zip(row) {
            col.push(s);
        }
    }
    Ok(by_detector)
}

/// Calibrates thresholds for several detectors on a shared H0 sample.
pub fn calibrate_thresholds(
    kinds: &[DetectorKind],
    cfg: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
    executor: Executor,
) -> Result<Vec<ThresholdTable>> {
    if (n_trials as f64) * cfg.pfa < 1.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "n_trials = {n_trials} is below 1/pfa = {}",
            1.0 / cfg.pfa
        )));
    }
    let scenario = Scenario::new(cfg)?;
    let stats = simulate_statistics(
        &scenario,
        kinds,
        Hypothesis::H0,
        Phase::Calibrate,
        0,
        n_trials,
        seed,
        executor,
    )?;
    kinds
        .iter()
        .zip(stats)
        .map(|(&detector, null_statistics)| {
            let (threshold, empirical_pfa) = threshold_from_null(&null_statistics, cfg.pfa)?;
            Ok(ThresholdTable {
                detector,
                threshold,
                n_trials,
                target_pfa: cfg.pfa,
                empirical_pfa,
                null_statistics,
            })
        })
        .collect()
}

pub fn calibrate_threshold(
    detector: DetectorKind,
    cfg: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
) -> Result<ThresholdTable> {
    let mut tables = calibrate_thresholds(&[detector], cfg, n_trials, seed, Executor::default())?;
    Ok(tables.remove(0))
}

/// Empirical false-alarm rate of each threshold on a fresh H0 run drawn
/// from a stream disjoint from calibration.
pub fn validate_thresholds(
    tables: &[ThresholdTable],
    cfg: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
    executor: Executor,
) -> Result<Vec<PdEstimate>> {
    let scenario = Scenario::new(cfg)?;
    let kinds: Vec<_> = tables.iter().map(|t| t.detector).collect();
    let stats = simulate_statistics(
        &scenario,
        &kinds,
        Hypothesis::H0,
        Phase::Validate,
        0,
        n_trials,
        seed,
        executor,
    )?;
    Ok(tables
        .iter()
        .zip(stats)
        .map(|(t, s)| pd_from_statistics(&s, t.threshold))
        .collect())
}

/// Detection probability of one detector at one SCNR.
pub fn estimate_pd(
    detector: DetectorKind,
    cfg: &ScenarioConfig,
    threshold: f64,
    scnr_db: f64,
    n_trials: usize,
    seed: u64,
) -> Result<PdEstimate> {
    let scenario = Scenario::new(cfg)?;
    let stats = simulate_statistics(
        &scenario,
        &[detector],
        Hypothesis::H1 { scnr_db },
        Phase::Detect,
        detection_point(scnr_db),
        n_trials,
        seed,
        Executor::default(),
    )?;
    Ok(pd_from_statistics(&stats[0], threshold))
}

/// Stream key of a detection grid point; depends only on the SCNR value so
/// a point draws the same trials whatever grid it belongs to.
fn detection_point(scnr_db: f64) -> u64 {
    scnr_db.to_bits()
}

/// Sizes of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialCounts {
    pub calibration: usize,
    pub detection: usize,
}

impl TrialCounts {
    /// `⌈100/pfa⌉` calibration trials and 1000 trials per SCNR point.
    pub fn for_pfa(pfa: f64) -> Self {
        Self {
            calibration: default_calibration_trials(pfa),
            detection: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub thresholds: Vec<ThresholdTable>,
    pub curves: Vec<PdCurve>,
}

impl Experiment {
    pub fn curve(&self, kind: DetectorKind) -> Option<&PdCurve> {
        self.curves.iter().find(|c| c.detector == kind)
    }

    pub fn threshold(&self, kind: DetectorKind) -> Option<&ThresholdTable> {
        self.thresholds.iter().find(|t| t.detector == kind)
    }
}

/// Calibrates every detector once, then sweeps `cfg.scnr_grid_db`.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    kinds: &[DetectorKind],
    seed: u64,
    counts: TrialCounts,
    executor: Executor,
) -> Result<Experiment> {
    if kinds.is_empty() {
        return Err(Error::InvalidArgument("no detectors requested".into()));
    }
    if cfg.scnr_grid_db.is_empty() {
        return Err(Error::validation("scnr_grid_db", "must not be empty"));
    }
    let thresholds = calibrate_thresholds(kinds, cfg, counts.calibration, seed, executor)?;
    let scenario = Scenario::new(cfg)?;
    let mut curves: Vec<PdCurve> = kinds
        .iter()
        .map(|&detector| PdCurve {
            detector,
            scnr_db: cfg.scnr_grid_db.clone(),
            pd: Vec::new(),
            n_trials: Vec::new(),
            std_err: Vec::new(),
        })
        .collect();
    for &scnr_db in &cfg.scnr_grid_db {
        let stats = simulate_statistics(
            &scenario,
            kinds,
            Hypothesis::H1 { scnr_db },
            Phase::Detect,
            detection_point(scnr_db),
            counts.detection,
            seed,
            executor,
        )?;
        for ((curve, table), s) in curves.iter_mut().zip(&thresholds).zip(stats) {
            let est = pd_from_statistics(&s, table.threshold);
            curve.pd.push(est.pd);
            curve.std_err.push(est.std_err);
            curve.n_trials.push(est.n_trials);
        }
    }
    Ok(Experiment { thresholds, curves })
}

/// Mean per-iteration iterate change of a cyclic estimator under H1 with a
/// jammer whose azimuth is redrawn in the sidelobes on every trial.
pub fn convergence_profile(
    detector: DetectorKind,
    cfg: &ScenarioConfig,
    scnr_db: f64,
    n_trials: usize,
    seed: u64,
    executor: Executor,
) -> Result<ConvergenceProfile> {
    if !detector.is_iterative() {
        return Err(Error::InvalidArgument(format!("{detector} has no iterative estimator")));
    }
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be positive".into()));
    }
    let cfg = ScenarioConfig {
        jammer_present: true,
        jammer_azimuth_random: true,
        ..cfg.clone()
    };
    let scenario = Scenario::new(&cfg)?;
    let n_max = cfg.max_iterations;
    let control = IterationControl::fixed(n_max);
    let traces = executor.map(n_trials, |t| {
        let mut rng = trial_rng(seed, Phase::Converge, 0, t as u64);
        let data = scenario.synthesize(Hypothesis::H1 { scnr_db }, &mut rng)?;
        let mut out = detectors::evaluate(&[detector], &data, &scenario, control)?;
        Ok(out.remove(0).iterate_trace)
    })?;
    Ok(average_traces(detector, &traces, n_max))
}

/// Averages delta traces; iterations skipped by an early stop count as zero
/// change.
pub fn average_traces(detector: DetectorKind, traces: &[Vec<IterationDelta>], n_max: usize) -> ConvergenceProfile {
    let mut sig = vec![0.0; n_max];
    let mut amp = vec![0.0; n_max];
    for trace in traces {
        for (i, d) in trace.iter().take(n_max).enumerate() {
            sig[i] += d.signature;
            amp[i] += d.amplitude;
        }
    }
    let n = traces.len().max(1) as f64;
    ConvergenceProfile {
        detector,
        mean_signature_delta: sig.into_iter().map(|s| s / n).collect(),
        mean_amplitude_delta: amp.into_iter().map(|a| a / n).collect(),
        n_trials: traces.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn threshold_rule_examples() {
        let stats = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(threshold_from_null(&stats, 0.5).unwrap(), (3.0, 0.25));
        assert_eq!(threshold_from_null(&stats, 0.25).unwrap(), (4.0, 0.0));
    }

    #[test]
    fn threshold_rank_is_robust_to_rounding() {
        // 10⁴ · 0.01 must give m = 100, not 101
        assert_eq!(quantile_rank(10_000, 0.01), 100);
        assert_eq!(quantile_rank(1_000_000, 1e-4), 100);
        assert_eq!(quantile_rank(3, 0.5), 2);
    }

    #[test]
    fn too_few_trials_rejected() {
        assert!(matches!(
            threshold_from_null(&[1.0, 2.0], 0.1),
            Err(Error::InvalidArgument(_))
        ));
        let cfg = ScenarioConfig::default();
        assert!(matches!(
            calibrate_thresholds(&[DetectorKind::Amf], &cfg, 50, 0, Executor::serial()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn pd_extremes() {
        let e = pd_from_statistics(&[5.0, 6.0, 7.0], 1.0);
        assert_eq!((e.pd, e.std_err), (1.0, 0.0));
        let e = pd_from_statistics(&[5.0, 6.0, 7.0], 7.0);
        assert_eq!((e.pd, e.std_err), (0.0, 0.0));
        let e = pd_from_statistics(&[0.0, 2.0], 1.0);
        assert_eq!(e.std_err, (0.25f64 / 2.0).sqrt());
    }

    #[test]
    fn trial_streams_are_distinct_and_repeatable() {
        let a: u64 = trial_rng(1, Phase::Detect, 0, 5).random();
        let b: u64 = trial_rng(1, Phase::Detect, 0, 5).random();
        let c: u64 = trial_rng(1, Phase::Detect, 0, 6).random();
        let d: u64 = trial_rng(1, Phase::Calibrate, 0, 5).random();
        let e: u64 = trial_rng(1, Phase::Detect, 1, 5).random();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
    }

    #[test]
    fn fixed_point_trace_averages_to_zero() {
        let traces = vec![vec![IterationDelta::default(); 4]; 3];
        let p = average_traces(DetectorKind::Rncp, &traces, 4);
        assert!(p.mean_signature_delta.iter().all(|&d| d == 0.0));
        assert!(p.mean_amplitude_delta.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn executor_preserves_order() {
        let out = Executor::with_workers(4).map(100, |i| Ok(i * i)).unwrap();
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn small_experiment_is_worker_independent() {
        let cfg = ScenarioConfig {
            scnr_grid_db: vec![10.0, 20.0],
            ..Default::default()
        };
        let counts = TrialCounts {
            calibration: 200,
            detection: 50,
        };
        let a = run_experiment(&cfg, &DetectorKind::ALL, 9, counts, Executor::serial()).unwrap();
        let b = run_experiment(&cfg, &DetectorKind::ALL, 9, counts, Executor::with_workers(8)).unwrap();
        assert_eq!(a, b);
        for t in &a.thresholds {
            assert!(t.empirical_pfa <= cfg.pfa);
        }
    }
}
