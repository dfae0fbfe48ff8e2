use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::sac::TrainConfig;

/// Settings that belong to the run rather than to the environment or learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Save a checkpoint after every this many training episodes (0 disables).
    pub checkpoint_every: usize,
    pub eval_episodes: usize,
    /// Write a per-timestep trace for each evaluation episode.
    pub write_traces: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            checkpoint_every: 100,
            eval_episodes: 20,
            write_traces: true,
        }
    }
}

/// Full description of a run: `[run]`, `[env]` and `[train]` tables.
/// Missing keys take their defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub env: EnvConfig,
    pub train: TrainConfig,
}

/// Command-line values layered over the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tactile: Option<bool>,
    pub episodes: Option<usize>,
    pub eval_episodes: Option<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| {
                text.as_bytes()[..s.start.min(text.len())]
                    .iter()
                    .filter(|&&b| b == b'\n')
                    .count() as u64
                    + 1
            });
            Error::Parse {
                path: origin.to_path_buf(),
                line,
                reason: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or returns the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::from_toml_str(&text, p)
            }
        }
    }

    pub fn with_overrides(mut self, o: Overrides) -> Result<Self> {
        if let Some(s) = o.seed {
            self.train.seed = s;
        }
        if let Some(t) = o.tactile {
            self.env.tactile_enabled = t;
        }
        if let Some(n) = o.episodes {
            self.train.episodes = n;
        }
        if let Some(n) = o.eval_episodes {
            self.run.eval_episodes = n;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.train.validate()
    }

    /// Canonical TOML text; equal configs always serialize to equal bytes.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable as TOML")
    }

    /// Whether two configs differ in nothing but the tactile flag.
    pub fn matches_except_tactile(&self, other: &RunConfig) -> bool {
        let mut a = self.clone();
        a.env.tactile_enabled = other.env.tactile_enabled;
        a == *other
    }
}

/// Parses `on` / `off` (also `true` / `false`).
pub fn parse_switch(s: &str) -> Result<bool> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(Error::config(format!("expected on or off, got {s:?}"))),
    }
}
