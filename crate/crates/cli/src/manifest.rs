//! Run manifests: every command stamps its outputs with a deterministic run
//! id and writes a sibling manifest recording configs, input hashes, seed,
//! tool version, and per-stage timings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub command: String,
    pub args: Vec<String>,
    pub input_hashes: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub timings_ms: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

pub struct ManifestBuilder {
    command: String,
    args: Vec<String>,
    params: String,
    input_hashes: BTreeMap<String, String>,
    seed: Option<u64>,
    timings: BTreeMap<String, f64>,
    outputs: Vec<PathBuf>,
    started: Instant,
    last_mark: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        let now = Instant::now();
        ManifestBuilder {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            params: String::new(),
            input_hashes: BTreeMap::new(),
            seed: None,
            timings: BTreeMap::new(),
            outputs: Vec::new(),
            started: now,
            last_mark: now,
        }
    }

    pub fn hash_input(&mut self, path: &Path) -> modalfit::Result<()> {
        let bytes = std::fs::read(path).map_err(|e| modalfit::Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let digest = Sha256::digest(&bytes);
        self.input_hashes
            .insert(path.display().to_string(), hex::encode(digest));
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Computational parameters entering the run identity (output paths and
    /// other presentation-only arguments must stay out).
    pub fn set_params(&mut self, params: serde_json::Value) {
        self.params = params.to_string();
    }

    /// Record the wall time since the previous mark under `stage`.
    pub fn mark(&mut self, stage: &str) {
        let now = Instant::now();
        let ms = now.duration_since(self.last_mark).as_secs_f64() * 1e3;
        self.timings.insert(stage.to_string(), ms);
        self.last_mark = now;
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Deterministic id over version, command, computational parameters,
    /// input hashes, and seed. Output paths and timings are excluded, so a
    /// rerun of the same computation shares the id wherever it writes.
    pub fn run_id(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
        hasher.update(self.command.as_bytes());
        hasher.update(self.params.as_bytes());
        for digest in self.input_hashes.values() {
            hasher.update(digest.as_bytes());
        }
        if let Some(seed) = self.seed {
            hasher.update(seed.to_le_bytes());
        }
        hex::encode(&hasher.finalize()[..8])
    }

    /// Write `<primary>.manifest.json` next to the primary output.
    pub fn write(mut self, primary: &Path) -> modalfit::Result<()> {
        self.timings.insert(
            "total".into(),
            self.started.elapsed().as_secs_f64() * 1e3,
        );
        let manifest = RunManifest {
            run_id: self.run_id(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            args: self.args,
            input_hashes: self.input_hashes,
            seed: self.seed,
            timings_ms: self.timings,
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
        };
        let path = manifest_path(primary);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| modalfit::Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut os = primary.as_os_str().to_owned();
    os.push(".manifest.json");
    PathBuf::from(os)
}
