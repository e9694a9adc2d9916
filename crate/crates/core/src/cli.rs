//! `ncpd` command-line front end.

use std::cell::RefCell;
use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error as ThisError;

use crate::config::{parse_config, ConfigError};
use crate::detectors::DetectorKind;
use crate::error::Error;
use crate::montecarlo::{self, Executor, TrialCounts};
use crate::output::{self, Manifest};
use crate::scenario::ScenarioConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ncpd", version, about = "Monte Carlo evaluation of NCP-jamming detectors")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Scenario file (flat TOML); omitted fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; overrides `rng_seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub pfa: Option<f64>,

    /// Worker threads; 1 runs serially. Defaults to all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Comma-separated subset of cd,rncp,dncp,amf.
    #[arg(long, global = true, value_delimiter = ',')]
    pub detectors: Option<Vec<String>>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub scnr_min: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub scnr_max: Option<f64>,

    #[arg(long, global = true)]
    pub scnr_step: Option<f64>,

    /// Trials per SCNR point.
    #[arg(long, global = true)]
    pub trials_pd: Option<usize>,

    /// Null trials for threshold calibration; defaults to ⌈100/pfa⌉.
    #[arg(long, global = true)]
    pub trials_cal: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate thresholds and write them as CSV.
    Calibrate,
    /// Calibrate, then sweep Pd over the SCNR grid.
    Sweep,
    /// Mean iterate change per iteration of the cyclic estimators.
    Converge {
        /// rncp or dncp; both when omitted.
        #[arg(long)]
        detector: Option<String>,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        scnr: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Run a named preset: 3–4 convergence, 5–11 Pd curves.
    ReproduceFigure { id: u32 },
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(ConfigError::Io { .. }) => EXIT_USAGE,
            CliError::Config(_) => EXIT_VALIDATION,
            CliError::Run(Error::Validation { .. } | Error::InvalidArgument(_)) => EXIT_VALIDATION,
            CliError::Run(_) => EXIT_NUMERIC,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

/// Parameter set behind `reproduce-figure`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Figure {
    Convergence { detector: DetectorKind },
    Curves { n: usize, k: usize, jammer: bool },
}

pub fn figure_preset(id: u32) -> Option<Figure> {
    let curves = |n, k, jammer| Some(Figure::Curves { n, k, jammer });
    match id {
        3 => Some(Figure::Convergence {
            detector: DetectorKind::Rncp,
        }),
        4 => Some(Figure::Convergence {
            detector: DetectorKind::Dncp,
        }),
        5 => curves(8, 12, true),
        6 => curves(8, 16, true),
        7 => curves(8, 24, true),
        8 => curves(8, 12, false),
        9 => curves(8, 16, false),
        10 => curves(8, 24, false),
        11 => curves(16, 32, true),
        _ => None,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
/// Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let common = &cli.common;
    let mut cfg = base_config(common)?;
    let seed = common.seed.unwrap_or(cfg.rng_seed);
    let executor = match common.workers {
        Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
        Some(k) => Executor::with_workers(k),
        None => Executor::default(),
    };
    let out = Output::new(&common.out_dir)?;

    match &cli.command {
        Command::Calibrate => {
            let kinds = detector_list(common)?;
            let n_cal = common
                .trials_cal
                .unwrap_or(montecarlo::default_calibration_trials(cfg.pfa));
            let mut manifest = Manifest::new("calibrate", seed, &cfg);
            manifest.calibration_trials = Some(n_cal);
            let t = Instant::now();
            let tables = montecarlo::calibrate_thresholds(&kinds, &cfg, n_cal, seed, executor)?;
            manifest.timings_s.insert("calibrate".into(), t.elapsed().as_secs_f64());
            out.write(&mut manifest, "thresholds.csv", &output::thresholds_to_csv(&tables))?;
            out.finish(manifest, "manifest.json")
        }
        Command::Sweep => {
            let kinds = detector_list(common)?;
            sweep(
                &cfg,
                &kinds,
                seed,
                common,
                executor,
                &out,
                "sweep",
                "",
                "Pd versus SCNR",
            )
        }
        Command::Converge { detector, scnr, trials } => {
            let kinds = match detector {
                Some(d) => vec![parse_detector(d)?],
                None => vec![DetectorKind::Rncp, DetectorKind::Dncp],
            };
            converge(&cfg, &kinds, *scnr, *trials, seed, executor, &out, "")
        }
        Command::ReproduceFigure { id } => {
            let preset =
                figure_preset(*id).ok_or_else(|| CliError::Usage(format!("unknown figure id {id}; expected 3–11")))?;
            let prefix = format!("fig{id:02}_");
            match preset {
                Figure::Convergence { detector } => {
                    converge(&cfg, &[detector], 20.0, 1000, seed, executor, &out, &prefix)
                }
                Figure::Curves { n, k, jammer } => {
                    cfg.n_antennas = n;
                    cfg.k_secondary = k;
                    cfg.jammer_present = jammer;
                    cfg.jammer_azimuth_random = false;
                    cfg.validate()?;
                    let kinds = detector_list(common)?;
                    let title = format!(
                        "N={n}, K={k}, {}",
                        if jammer {
                            format!("jammer at {}°", cfg.jammer_azimuth_deg)
                        } else {
                            "no jammer".to_owned()
                        }
                    );
                    sweep(
                        &cfg,
                        &kinds,
                        seed,
                        common,
                        executor,
                        &out,
                        "reproduce-figure",
                        &prefix,
                        &title,
                    )
                }
            }
        }
    }
}

fn base_config(common: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(pfa) = common.pfa {
        cfg.pfa = pfa;
    }
    if common.scnr_min.is_some() || common.scnr_max.is_some() || common.scnr_step.is_some() {
        cfg.scnr_grid_db = scnr_grid(
            common.scnr_min.unwrap_or(0.0),
            common.scnr_max.unwrap_or(40.0),
            common.scnr_step.unwrap_or(2.0),
        )?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `min, min + step, …` up to `max` inclusive (with a small tolerance).
pub fn scnr_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::Usage(format!("--scnr-step must be positive, got {step}")));
    }
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(CliError::Usage(format!("empty SCNR range [{min}, {max}]")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

fn parse_detector(s: &str) -> Result<DetectorKind, CliError> {
    s.parse().map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn detector_list(common: &CommonArgs) -> Result<Vec<DetectorKind>, CliError> {
    let Some(names) = &common.detectors else {
        return Ok(DetectorKind::ALL.to_vec());
    };
    let mut kinds = Vec::new();
    for name in names {
        let kind = parse_detector(name)?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Usage("--detectors is empty".into()));
    }
    Ok(kinds)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    cfg: &ScenarioConfig,
    kinds: &[DetectorKind],
    seed: u64,
    common: &CommonArgs,
    executor: Executor,
    out: &Output,
    command: &str,
    prefix: &str,
    title: &str,
) -> Result<Vec<PathBuf>, CliError> {
    let defaults = TrialCounts::for_pfa(cfg.pfa);
    let counts = TrialCounts {
        calibration: common.trials_cal.unwrap_or(defaults.calibration),
        detection: common.trials_pd.unwrap_or(defaults.detection),
    };
    let mut manifest = Manifest::new(command, seed, cfg);
    manifest.calibration_trials = Some(counts.calibration);
    manifest.detection_trials = Some(counts.detection);
    let t = Instant::now();
    let exp = montecarlo::run_experiment(cfg, kinds, seed, counts, executor)?;
    manifest
        .timings_s
        .insert("experiment".into(), t.elapsed().as_secs_f64());

    let curves_name = format!("{prefix}curves.csv");
    let csv = output::curves_to_csv(&exp.curves).map_err(|source| CliError::Io {
        path: out.dir.join(&curves_name),
        source,
    })?;
    out.write(&mut manifest, &curves_name, &csv)?;
    out.write(
        &mut manifest,
        &format!("{prefix}thresholds.csv"),
        &output::thresholds_to_csv(&exp.thresholds),
    )?;
    out.write(
        &mut manifest,
        &format!("{prefix}plot.py"),
        &output::curves_plot_script(&curves_name, title),
    )?;
    out.finish(manifest, &format!("{prefix}manifest.json"))
}

#[allow(clippy::too_many_arguments)]
fn converge(
    cfg: &ScenarioConfig,
    kinds: &[DetectorKind],
    scnr_db: f64,
    trials: usize,
    seed: u64,
    executor: Executor,
    out: &Output,
    prefix: &str,
) -> Result<Vec<PathBuf>, CliError> {
    if let Some(k) = kinds.iter().find(|k| !k.is_iterative()) {
        return Err(CliError::Usage(format!(
            "{k} has no iterative estimator; use rncp or dncp"
        )));
    }
    let mut manifest = Manifest::new("converge", seed, cfg);
    for &kind in kinds {
        let t = Instant::now();
        let profile = montecarlo::convergence_profile(kind, cfg, scnr_db, trials, seed, executor)?;
        manifest.timings_s.insert(kind.id().into(), t.elapsed().as_secs_f64());
        let csv_name = format!("{prefix}convergence_{}.csv", kind.id());
        out.write(&mut manifest, &csv_name, &output::convergence_to_csv(&profile))?;
        out.write(
            &mut manifest,
            &format!("{prefix}plot_convergence_{}.py", kind.id()),
            &output::convergence_plot_script(&csv_name, &format!("{kind}, SCNR = {scnr_db} dB")),
        )?;
    }
    out.finish(manifest, &format!("{prefix}manifest.json"))
}

struct Output {
    dir: PathBuf,
    written: RefCell<Vec<PathBuf>>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_owned(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_owned(),
            written: Default::default(),
        })
    }

    fn write(&self, manifest: &mut Manifest, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        manifest.files.push(name.to_owned());
        self.written.borrow_mut().push(path);
        Ok(())
    }

    fn finish(&self, manifest: Manifest, name: &str) -> Result<Vec<PathBuf>, CliError> {
        let path = self.dir.join(name);
        manifest.write(&path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let mut written = self.written.borrow_mut();
        written.push(path);
        Ok(std::mem::take(&mut *written))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(scnr_grid(0.0, 40.0, 2.0).unwrap().len(), 21);
        assert_eq!(
            scnr_grid(0.0, 0.3, 0.1).unwrap(),
            vec![0.0, 0.1, 0.2, 0.30000000000000004]
        );
        assert_eq!(scnr_grid(5.0, 5.0, 1.0).unwrap(), vec![5.0]);
        assert!(scnr_grid(0.0, 10.0, 0.0).is_err());
        assert!(scnr_grid(10.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(
            figure_preset(5),
            Some(Figure::Curves {
                n: 8,
                k: 12,
                jammer: true
            })
        );
        assert_eq!(
            figure_preset(10),
            Some(Figure::Curves {
                n: 8,
                k: 24,
                jammer: false
            })
        );
        assert_eq!(
            figure_preset(11),
            Some(Figure::Curves {
                n: 16,
                k: 32,
                jammer: true
            })
        );
        assert!(matches!(figure_preset(4), Some(Figure::Convergence { .. })));
        assert_eq!(figure_preset(2), None);
        assert_eq!(figure_preset(12), None);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["ncpd", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["ncpd", "reproduce-figure", "12"]), EXIT_USAGE);
        assert_eq!(run(["ncpd", "sweep", "--pfa", "2"]), EXIT_VALIDATION);
        assert_eq!(run(["ncpd", "sweep", "--detectors", "cd,glrt"]), EXIT_USAGE);
        assert_eq!(run(["ncpd", "converge", "--detector", "amf"]), EXIT_USAGE);
        assert_eq!(run(["ncpd", "--version"]), EXIT_OK);
    }
}
