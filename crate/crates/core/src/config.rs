//! Plain-text scenario files.
//!
//! ```text
//! # ten Bernoulli arms
//! horizon = 20000
//! replications = 1000
//! paper_replications = 50000
//! seed = 1
//! rescale_bound = 1
//! arm = bernoulli 0.1
//! arm = bernoulli 0.05
//! policy = klucb bernoulli logt
//! policy = ucb
//! ```
//!
//! `#` starts a comment. `arm` and `policy` repeat; the other keys appear at
//! most once. `rescale_bound` defaults to 1 and `paper_replications` is
//! optional.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::environment::ArmModel;
use crate::policy::PolicySpec;
use crate::simulator::Scenario;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("cannot read {path}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub horizon: u64,
    pub replications: u64,
    pub paper_replications: Option<u64>,
    pub seed: u64,
    pub rescale_bound: f64,
    pub arms: Vec<ArmModel>,
    pub policies: Vec<PolicySpec>,
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        text.parse()
    }

    /// Replication count, switching to `paper_replications` when asked and
    /// available.
    pub fn replications(&self, paper_scale: bool) -> u64 {
        match (paper_scale, self.paper_replications) {
            (true, Some(n)) => n,
            _ => self.replications,
        }
    }

    pub fn scenario(&self, paper_scale: bool) -> Result<Scenario, ConfigError> {
        Scenario::new(
            self.arms.clone(),
            self.horizon,
            self.replications(paper_scale),
            self.seed,
            self.rescale_bound,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// SHA-256 of the canonical text, in hex.
    pub fn fingerprint(&self) -> String {
        Sha256::digest(self.to_string().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn set_once<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<(), ConfigError> {
    if slot.is_some() {
        return Err(ConfigError::Line { line, message: format!("duplicate key '{key}'") });
    }
    *slot = Some(value);
    Ok(())
}

fn parse_value<T: FromStr>(value: &str, key: &str, line: usize) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::Line { line, message: format!("{key}: cannot parse '{value}'") })
}

impl FromStr for ScenarioConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut horizon = None;
        let mut replications = None;
        let mut paper_replications = None;
        let mut seed = None;
        let mut rescale_bound = None;
        let mut arms = Vec::new();
        let mut policies = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Line {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let spec_err = |e: crate::Error| ConfigError::Line { line, message: e.to_string() };
            match key {
                "horizon" => set_once(&mut horizon, parse_value(value, key, line)?, key, line)?,
                "replications" => set_once(&mut replications, parse_value(value, key, line)?, key, line)?,
                "paper_replications" => {
                    set_once(&mut paper_replications, parse_value(value, key, line)?, key, line)?
                }
                "seed" => set_once(&mut seed, parse_value(value, key, line)?, key, line)?,
                "rescale_bound" => set_once(&mut rescale_bound, parse_value(value, key, line)?, key, line)?,
                "arm" => arms.push(value.parse().map_err(spec_err)?),
                "policy" => policies.push(value.parse().map_err(spec_err)?),
                other => {
                    return Err(ConfigError::Line {
                        line,
                        message: format!(
                            "unknown key '{other}' (expected horizon, replications, paper_replications, seed, \
                             rescale_bound, arm or policy)"
                        ),
                    })
                }
            }
        }

        let missing = |key: &str| ConfigError::Invalid(format!("missing required key '{key}'"));
        if arms.is_empty() {
            return Err(ConfigError::Invalid("no arms".into()));
        }
        if policies.is_empty() {
            return Err(ConfigError::Invalid("no policies".into()));
        }
        let config = Self {
            horizon: horizon.ok_or_else(|| missing("horizon"))?,
            replications: replications.ok_or_else(|| missing("replications"))?,
            paper_replications,
            seed: seed.ok_or_else(|| missing("seed"))?,
            rescale_bound: rescale_bound.unwrap_or(1.0),
            arms,
            policies,
        };
        if config.paper_replications == Some(0) {
            return Err(ConfigError::Invalid("paper_replications must be positive".into()));
        }
        config.scenario(false)?;
        Ok(config)
    }
}

impl fmt::Display for ScenarioConfig {
    /// Canonical form; parses back to an equal config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "horizon = {}", self.horizon)?;
        writeln!(f, "replications = {}", self.replications)?;
        if let Some(n) = self.paper_replications {
            writeln!(f, "paper_replications = {n}")?;
        }
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "rescale_bound = {}", self.rescale_bound)?;
        for arm in &self.arms {
            writeln!(f, "arm = {arm}")?;
        }
        for policy in &self.policies {
            writeln!(f, "policy = {policy}")?;
        }
        Ok(())
    }
}
