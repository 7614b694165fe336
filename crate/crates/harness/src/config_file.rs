//! Scenario files: flat TOML whose keys mirror [`ScenarioConfig`].

use std::fs;
use std::path::Path;

use rfusion_core::config::{Scenario, ScenarioConfig};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: invalid scenario: {source}")]
    Invalid {
        path: String,
        #[source]
        source: rfusion_core::Error,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

/// Parse and validate scenario text. `origin` names the source in messages.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Parse {
            path: origin.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    Scenario::build(&cfg).map_err(|source| ConfigError::Invalid {
        path: origin.to_string(),
        source,
    })?;
    Ok(cfg)
}

pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: origin.clone(),
        source,
    })?;
    parse_scenario_str(&text, &origin)
}

/// Canonical TOML rendering of a resolved configuration.
pub fn render(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("scenario configuration is always representable in TOML")
}

/// Hex SHA-256 of [`render`].
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    Sha256::digest(render(cfg).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
