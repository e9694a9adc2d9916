//! Scenario configuration files.
//!
//! The format is flat TOML: one `key = value` line per [`ScenarioConfig`]
//! field, all optional, no nested tables. Unknown keys are rejected.
//!
//! ```toml
//! n_antennas = 8
//! k_secondary = 16
//! jammer_present = false
//! scnr_grid_db = [0.0, 5.0, 10.0, 15.0, 20.0]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::Error;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Invalid(#[from] Error),
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config_str(&text).map_err(|e| match e {
        ConfigError::Parse { line, message, .. } => ConfigError::Parse {
            path: path.to_owned(),
            line,
            message,
        },
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        ConfigError::Parse {
            path: PathBuf::from("<config>"),
            line,
            message: e.message().to_owned(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text form, readable by [`parse_config_str`].
pub fn to_config_string(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("scenario config is always representable")
}
