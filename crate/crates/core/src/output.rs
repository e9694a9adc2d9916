//! CSV tables, plot scripts and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::to_config_string;
use crate::montecarlo::{ConvergenceProfile, PdCurve, ThresholdTable};
use crate::scenario::ScenarioConfig;

pub const CURVES_HEADER: &str = "scnr_db,detector,pd,std_err,n_trials";
pub const THRESHOLDS_HEADER: &str = "detector,threshold,n_trials,target_pfa,empirical_pfa";
pub const CONVERGENCE_HEADER: &str = "iteration,detector,mean_delta_signature,mean_delta_amplitude,n_trials";

/// Formats like C's `%g`: six significant digits, trailing zeros dropped,
/// exponent form outside `1e-4 ≤ |x| < 1e6`.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // Exponent after rounding to six digits.
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidInput, msg.into())
}

/// One row per (detector, SCNR) point, sorted by detector id then SCNR.
pub fn curves_to_csv(curves: &[PdCurve]) -> io::Result<String> {
    let first = curves.first().ok_or_else(|| invalid("no curves to write"))?;
    for c in curves {
        if c.scnr_db != first.scnr_db {
            return Err(invalid(format!("{} uses a different SCNR grid", c.detector)));
        }
        let n = c.scnr_db.len();
        if c.pd.len() != n || c.std_err.len() != n || c.n_trials.len() != n {
            return Err(invalid(format!("{} has ragged columns", c.detector)));
        }
    }
    let mut rows = Vec::new();
    for c in curves {
        for i in 0..c.scnr_db.len() {
            rows.push((c.detector.id(), c.scnr_db[i], c.pd[i], c.std_err[i], c.n_trials[i]));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(b.0).then(a.1.total_cmp(&b.1)));
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for (det, scnr, pd, se, n) in rows {
        writeln!(out, "{},{det},{},{},{n}", fmt_g6(scnr), fmt_g6(pd), fmt_g6(se)).unwrap();
    }
    Ok(out)
}

pub fn write_curves_csv(curves: &[PdCurve], path: &Path) -> io::Result<()> {
    fs::write(path, curves_to_csv(curves)?)
}

pub fn thresholds_to_csv(tables: &[ThresholdTable]) -> String {
    let mut out = String::from(THRESHOLDS_HEADER);
    out.push('\n');
    for t in tables {
        writeln!(
            out,
            "{},{},{},{},{}",
            t.detector.id(),
            fmt_g6(t.threshold),
            t.n_trials,
            fmt_g6(t.target_pfa),
            fmt_g6(t.empirical_pfa)
        )
        .unwrap();
    }
    out
}

/// One row per iteration `1..=N_max`.
pub fn convergence_to_csv(profile: &ConvergenceProfile) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for (i, (s, a)) in profile
        .mean_signature_delta
        .iter()
        .zip(&profile.mean_amplitude_delta)
        .enumerate()
    {
        writeln!(
            out,
            "{},{},{},{},{}",
            i + 1,
            profile.detector.id(),
            fmt_g6(*s),
            fmt_g6(*a),
            profile.n_trials
        )
        .unwrap();
    }
    out
}

/// Matplotlib script plotting Pd against SCNR from a curves CSV in the
/// same directory.
pub fn curves_plot_script(csv_name: &str, title: &str) -> String {
    format!(
        r#"import csv
import os
from collections import defaultdict

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
curves = defaultdict(lambda: ([], []))
with open(os.path.join(here, "{csv_name}")) as f:
    for row in csv.DictReader(f):
        x, y = curves[row["detector"]]
        x.append(float(row["scnr_db"]))
        y.append(float(row["pd"]))

labels = {{"cd": "CD", "rncp": "R-NCP-D", "dncp": "D-NCP-D", "amf": "AMF"}}
for det, (x, y) in curves.items():
    plt.plot(x, y, marker="o", label=labels.get(det, det))
plt.xlabel("SCNR (dB)")
plt.ylabel("Pd")
plt.ylim(0, 1.02)
plt.grid(True)
plt.legend()
plt.title("{title}")
plt.savefig(os.path.join(here, "{stem}.png"), dpi=150)
"#,
        stem = csv_name.trim_end_matches(".csv"),
    )
}

/// Matplotlib script plotting mean iterate changes on a log scale.
pub fn convergence_plot_script(csv_name: &str, title: &str) -> String {
    format!(
        r#"import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
it, sig, amp = [], [], []
with open(os.path.join(here, "{csv_name}")) as f:
    for row in csv.DictReader(f):
        it.append(int(row["iteration"]))
        sig.append(float(row["mean_delta_signature"]))
        amp.append(float(row["mean_delta_amplitude"]))

plt.semilogy(it, sig, marker="o", label="signature")
plt.semilogy(it, amp, marker="s", label="amplitude")
plt.xlabel("iteration")
plt.ylabel("mean |change|")
plt.grid(True, which="both")
plt.legend()
plt.title("{title}")
plt.savefig(os.path.join(here, "{stem}.png"), dpi=150)
"#,
        stem = csv_name.trim_end_matches(".csv"),
    )
}

/// SHA-256 of the canonical text form of a configuration, hex encoded.
pub fn config_digest(cfg: &ScenarioConfig) -> String {
    Sha256::digest(to_config_string(cfg).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: ScenarioConfig,
    pub calibration_trials: Option<usize>,
    pub detection_trials: Option<usize>,
    pub files: Vec<String>,
    /// Wall-clock seconds per stage. Not reproducible across runs.
    pub timings_s: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, cfg: &ScenarioConfig) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            seed,
            config_sha256: config_digest(cfg),
            config: cfg.clone(),
            calibration_trials: None,
            detection_trials: None,
            files: Vec::new(),
            timings_s: BTreeMap::new(),
        }
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(path, text)
    }
}
