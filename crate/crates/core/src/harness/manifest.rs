use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const VERSION_TAG: &str = concat!("softcap ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Record of one invocation, written once when it ends (successfully or not).
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// `ok` or `failed`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub summary: toml::Table,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_b: Option<RunConfig>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| Error::config(format!("manifest: {e}")))?;
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    }
}

/// Converts any serializable summary into a TOML table (empty on failure).
pub fn summary_table<T: Serialize>(summary: &T) -> toml::Table {
    toml::Table::try_from(summary).unwrap_or_default()
}
