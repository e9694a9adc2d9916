//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes the scenario as a JSON object with the same keys as
//! the CLI config file (missing keys take defaults) and returns JSON.

use ncpd::detectors::{self, DetectorKind, IterationControl};
use ncpd::montecarlo::{self, Executor, Phase, TrialCounts};
use ncpd::scenario::{Hypothesis, Scenario, ScenarioConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
struct Curve {
    detector: DetectorKind,
    label: &'static str,
    scnr_db: Vec<f64>,
    pd: Vec<f64>,
    std_err: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Sweep {
    thresholds: Vec<(DetectorKind, f64)>,
    curves: Vec<Curve>,
}

#[derive(Debug, Serialize)]
struct Profile {
    detector: DetectorKind,
    label: &'static str,
    signature: Vec<f64>,
    amplitude: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct TrialStatistic {
    detector: DetectorKind,
    label: &'static str,
    statistic: f64,
    iterations: usize,
}

fn parse(config_json: &str) -> Result<ScenarioConfig, String> {
    let text = if config_json.trim().is_empty() {
        "{}"
    } else {
        config_json
    };
    let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Calibrates all four detectors and sweeps Pd over `scnr_grid_db`.
pub fn pd_sweep_json(config_json: &str, trials_cal: usize, trials_pd: usize, seed: u64) -> Result<String, String> {
    let cfg = parse(config_json)?;
    let counts = TrialCounts {
        calibration: trials_cal,
        detection: trials_pd,
    };
    let exp = montecarlo::run_experiment(&cfg, &DetectorKind::ALL, seed, counts, Executor::serial())
        .map_err(|e| e.to_string())?;
    to_json(&Sweep {
        thresholds: exp.thresholds.iter().map(|t| (t.detector, t.threshold)).collect(),
        curves: exp
            .curves
            .into_iter()
            .map(|c| Curve {
                detector: c.detector,
                label: c.detector.label(),
                scnr_db: c.scnr_db,
                pd: c.pd,
                std_err: c.std_err,
            })
            .collect(),
    })
}

/// Mean per-iteration iterate change of both cyclic estimators.
pub fn convergence_json(config_json: &str, scnr_db: f64, trials: usize, seed: u64) -> Result<String, String> {
    let cfg = parse(config_json)?;
    let profiles = [DetectorKind::Rncp, DetectorKind::Dncp]
        .into_iter()
        .map(|kind| {
            let p = montecarlo::convergence_profile(kind, &cfg, scnr_db, trials, seed, Executor::serial())
                .map_err(|e| e.to_string())?;
            Ok(Profile {
                detector: kind,
                label: kind.label(),
                signature: p.mean_signature_delta,
                amplitude: p.mean_amplitude_delta,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&profiles)
}

/// Statistics of every detector on one synthesized trial; `scnr_db = None`
/// draws under H0.
pub fn single_trial_json(config_json: &str, scnr_db: Option<f64>, seed: u64) -> Result<String, String> {
    let cfg = parse(config_json)?;
    let scenario = Scenario::new(&cfg).map_err(|e| e.to_string())?;
    let hypothesis = match scnr_db {
        Some(scnr_db) => Hypothesis::H1 { scnr_db },
        None => Hypothesis::H0,
    };
    let mut rng = montecarlo::trial_rng(seed, Phase::Detect, 0, 0);
    let data = scenario.synthesize(hypothesis, &mut rng).map_err(|e| e.to_string())?;
    let control = IterationControl::fixed(cfg.max_iterations);
    let outcomes = detectors::evaluate(&DetectorKind::ALL, &data, &scenario, control).map_err(|e| e.to_string())?;
    let stats: Vec<TrialStatistic> = DetectorKind::ALL
        .iter()
        .zip(outcomes)
        .map(|(&kind, o)| TrialStatistic {
            detector: kind,
            label: kind.label(),
            statistic: o.statistic,
            iterations: o.iterations_run,
        })
        .collect();
    to_json(&stats)
}

#[wasm_bindgen]
pub fn pd_sweep(config_json: &str, trials_cal: u32, trials_pd: u32, seed: u32) -> Result<String, JsError> {
    pd_sweep_json(config_json, trials_cal as usize, trials_pd as usize, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn convergence(config_json: &str, scnr_db: f64, trials: u32, seed: u32) -> Result<String, JsError> {
    convergence_json(config_json, scnr_db, trials as usize, seed.into()).map_err(|e| JsError::new(&e))
}

/// Pass `NaN` for `scnr_db` to draw under H0.
#[wasm_bindgen]
pub fn single_trial(config_json: &str, scnr_db: f64, seed: u32) -> Result<String, JsError> {
    let scnr = (!scnr_db.is_nan()).then_some(scnr_db);
    single_trial_json(config_json, scnr, seed.into()).map_err(|e| JsError::new(&e))
}
