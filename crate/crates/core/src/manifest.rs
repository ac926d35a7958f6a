//! Run manifests: the resolved configuration plus enough bookkeeping to
//! repeat a CLI invocation. Written as JSON next to the outputs before any
//! long computation starts, and rewritten with a finish time at the end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::FileConfig;
use crate::Result;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Full argument vector, program name excluded.
    pub args: Vec<String>,
    pub config: FileConfig,
    pub seeds: BTreeMap<String, u64>,
    pub outputs: BTreeMap<String, PathBuf>,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: FileConfig) -> Self {
        Self {
            tool: "axlesim".into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            args,
            config,
            seeds: BTreeMap::new(),
            outputs: BTreeMap::new(),
            started_at: now(),
            finished_at: None,
            notes: Vec::new(),
        }
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.into(), value);
        self
    }

    pub fn output(mut self, name: &str, path: impl Into<PathBuf>) -> Self {
        self.outputs.insert(name.into(), path.into());
        self
    }

    pub fn finish(&mut self) {
        self.finished_at = Some(now());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is serializable")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// `out.csv` → `out.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    output.with_file_name(format!("{stem}.manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.manifest.json");
        let mut m = RunManifest::new("simulate", vec!["--flat".into()], FileConfig::default())
            .seed("road", 42)
            .output("response", "resp.csv");
        m.finish();
        m.write(&path).unwrap();
        let back = RunManifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config.vehicle().unwrap(), crate::VehicleParams::reference());
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("out/data.csv")),
            PathBuf::from("out/data.manifest.json")
        );
    }
}
