//! Replay header embedded in every output file.
//!
//! The header is a block of `#` comment lines. It carries everything needed
//! to regenerate the file: the resolved configuration, the resolved job
//! parameters and the seed. Replaying a file reproduces it byte for byte.

use serde::{Deserialize, Serialize};

use super::Job;
use crate::model::SystemConfig;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Command line of the original invocation (informational).
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub config: SystemConfig,
    pub job: Job,
    pub output_path: String,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# tool: {}\n# command: {}\n# argv: {}\n# seed: {}\n# config: {}\n# job: {}\n# output: {}\n",
            self.tool_version,
            self.command,
            to_json(&self.argv),
            seed,
            self.config.to_json(),
            to_json(&self.job),
            self.output_path,
        )
    }

    /// Reads the manifest back from the leading `#` lines of `text`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((key, value)) = line.trim_start_matches('#').trim_start().split_once(": ") {
                fields.insert(key.to_string(), value.to_string());
            }
        }
        let get = |key: &str| fields.get(key).cloned().ok_or_else(|| format!("manifest has no `{key}` line"));
        let seed = match get("seed")?.as_str() {
            "none" => None,
            s => Some(s.parse().map_err(|e| format!("bad seed in manifest: {e}"))?),
        };
        Ok(RunManifest {
            tool_version: get("tool")?,
            command: get("command")?,
            argv: serde_json::from_str(&get("argv")?).map_err(|e| format!("bad argv in manifest: {e}"))?,
            seed,
            config: SystemConfig::from_json(&get("config")?).map_err(|e| e.to_string())?,
            job: serde_json::from_str(&get("job")?).map_err(|e| format!("bad job in manifest: {e}"))?,
            output_path: get("output")?,
        })
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("manifest fields are serializable")
}
