//! Runtime configuration: provider endpoints, models, mode and directories.
//!
//! Values come from (lowest to highest precedence) built-in defaults, a TOML
//! file given with `--config` or `TRANSPEC_CONFIG`, and command-line flags.
//! The API key is only ever read from the environment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const CONFIG_ENV: &str = "TRANSPEC_CONFIG";
pub const API_KEY_ENV: &str = "TRANSPEC_API_KEY";
/// Consulted when `TRANSPEC_API_KEY` is unset.
pub const FALLBACK_API_KEY_ENV: &str = "OPENAI_API_KEY";

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_CHAT_MODEL: &str = "gpt-4";
pub const DEFAULT_EMBED_MODEL: &str = "text-embedding-ada-002";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    #[default]
    Replay,
    Record,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Live => "live",
            Self::Replay => "replay",
            Self::Record => "record",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Self::Live),
            "replay" => Ok(Self::Replay),
            "record" => Ok(Self::Record),
            other => Err(format!("unknown mode {other:?} (expected live, replay or record)")),
        }
    }
}

/// How `n` candidates are obtained from the chat model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// One prompt that asks for all `n` translations at once.
    #[default]
    SingleResponse,
    /// `n` separate calls with a single-translation prompt.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    pub chat_base_url: String,
    pub embed_base_url: String,
    pub chat_model: String,
    pub embed_model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub sampling: Sampling,
    pub fixtures_dir: PathBuf,
    pub sessions_dir: PathBuf,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// Never read from files; filled from the environment.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mode: Mode::Replay,
            chat_base_url: DEFAULT_BASE_URL.into(),
            embed_base_url: DEFAULT_BASE_URL.into(),
            chat_model: DEFAULT_CHAT_MODEL.into(),
            embed_model: DEFAULT_EMBED_MODEL.into(),
            temperature: 1.0,
            max_tokens: 1024,
            sampling: Sampling::SingleResponse,
            fixtures_dir: PathBuf::from("fixtures/paper"),
            sessions_dir: PathBuf::from("sessions"),
            timeout_secs: 60,
            max_retries: 2,
            api_key: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config file {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        let config: Self =
            toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_owned(), source })?;
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ConfigError::Invalid(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(ConfigError::Invalid("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Reads the API key from `TRANSPEC_API_KEY`, falling back to
    /// `OPENAI_API_KEY`.
    pub fn with_env_api_key(mut self) -> Self {
        self.api_key = [API_KEY_ENV, FALLBACK_API_KEY_ENV]
            .iter()
            .find_map(|k| std::env::var(k).ok().filter(|v| !v.trim().is_empty()));
        self
    }
}
