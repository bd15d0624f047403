use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Every command writes one of these next to its outputs. Rerunning the
/// stored argv (`urysohn replay manifest.json`) reproduces the data files
/// byte for byte; only `created_utc` differs between runs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub created_utc: String,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: serde_json::Value, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            config,
            seeds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_utc: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn write(&self, path: &Path) -> urysohn::Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| urysohn::Error::InvalidConfig(format!("manifest serialisation: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> urysohn::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| urysohn::Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: format!("manifest: {e}"),
        })
    }
}
