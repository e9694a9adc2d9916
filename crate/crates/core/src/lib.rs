//! Adaptive detection of point targets in clutter under noise-cover-pulse
//! jamming.
//!
//! * [`scenario`] builds the array/clutter/jammer model and draws trials.
//! * [`detectors`] holds the rank-one-covariance (R-NCP-D) and
//!   deterministic-signature (D-NCP-D) detectors with their cyclic
//!   estimators, plus AMF and clairvoyant baselines.
//! * [`montecarlo`] calibrates thresholds and sweeps detection curves.
//! * `cli`, `config` and `output` (feature `cli`) drive experiments from
//!   the `ncpd` binary and write CSV results.

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detectors;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod scenario;

#[cfg(feature = "cli")]
pub mod cli;
#[cfg(feature = "cli")]
pub mod config;
#[cfg(feature = "cli")]
pub mod output;

pub use detectors::{DetectorKind, DetectorOutcome, IterationControl};
pub use error::{Error, Result};
pub use scenario::{Dataset, Hypothesis, Scenario, ScenarioConfig};
