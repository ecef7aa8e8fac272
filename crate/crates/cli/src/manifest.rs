use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliResult, DataContext};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one command run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    /// Effective configuration after applying flags.
    pub config: serde_json::Value,
    pub seed: u64,
    pub timings: Vec<StageTiming>,
    /// Output paths relative to the output location.
    pub outputs: Vec<String>,
}

pub fn config_hash(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON values serialize");
    hex::encode(Sha256::digest(&bytes))
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash(&config),
            config,
            seed,
            timings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming { stage: stage.into(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    pub fn add_output(&mut self, root: &Path, path: &Path) {
        let rel = path.strip_prefix(root).unwrap_or(path);
        self.outputs.push(rel.to_string_lossy().replace('\\', "/"));
    }

    /// Writes the manifest through a temporary file and a rename.
    pub fn write_atomic(&self, path: &Path) -> CliResult<()> {
        let tmp: PathBuf = path.with_extension("json.tmp");
        let mut text = serde_json::to_string_pretty(self).data_ctx("serializing manifest")?;
        text.push('\n');
        fs::write(&tmp, text).data_ctx(format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, path).data_ctx(format!("renaming to {}", path.display()))
    }
}
