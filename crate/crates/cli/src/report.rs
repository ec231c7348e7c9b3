//! Output directory bookkeeping and the per-run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const REPORT_FILE: &str = "run_report.toml";
pub const CONFIG_ECHO_FILE: &str = "resolved_config.toml";

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub verb: String,
    /// `completed` or `failed`.
    pub status: String,
    pub seed: u64,
    /// SHA-256 over the resolved config followed by every input file.
    pub inputs_sha256: String,
    pub elapsed_s: f64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Scalar results worth reading without opening the CSVs.
    pub summary: Vec<String>,
    pub outputs: Vec<OutputEntry>,
}

/// Collects everything a verb writes below its output directory.
pub struct Run {
    root: PathBuf,
    verb: String,
    seed: u64,
    started: Instant,
    inputs: Sha256,
    pub outputs: Vec<OutputEntry>,
    pub warnings: Vec<String>,
    pub summary: Vec<String>,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Run {
    pub fn start(root: &Path, verb: &str, seed: u64, resolved_config: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        let mut inputs = Sha256::new();
        inputs.update(resolved_config.as_bytes());
        let mut run = Run {
            root: root.to_path_buf(),
            verb: verb.to_string(),
            seed,
            started: Instant::now(),
            inputs,
            outputs: Vec::new(),
            warnings: Vec::new(),
            summary: Vec::new(),
        };
        run.write(CONFIG_ECHO_FILE, resolved_config.as_bytes())?;
        Ok(run)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Adds an input file to the inputs digest.
    pub fn record_input(&mut self, path: &Path) -> anyhow::Result<()> {
        let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.update(bytes);
        Ok(())
    }

    /// Writes `bytes` to `rel` below the output root and lists it in the manifest.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(OutputEntry { path: rel.to_string(), bytes: bytes.len() as u64, sha256: digest(bytes) });
        Ok(())
    }

    /// Runs a writer into memory and stores the result as `rel`.
    pub fn write_with(
        &mut self,
        rel: &str,
        f: impl FnOnce(&mut Vec<u8>) -> rbstark::Result<()>,
    ) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(rel, &buf)
    }

    pub fn note(&mut self, line: impl Into<String>) {
        let line = line.into();
        println!("{line}");
        self.summary.push(line);
    }

    pub fn warn(&mut self, line: impl Into<String>) {
        let line = line.into();
        eprintln!("warning: {line}");
        self.warnings.push(line);
    }

    /// Writes the manifest. Always called, also after a failure, so the
    /// completed artifacts stay listed.
    pub fn finish(self, error: Option<&anyhow::Error>) -> anyhow::Result<()> {
        let report = RunReport {
            tool: format!("rbstark {}", env!("CARGO_PKG_VERSION")),
            verb: self.verb,
            status: if error.is_some() { "failed" } else { "completed" }.to_string(),
            seed: self.seed,
            inputs_sha256: hex::encode(self.inputs.finalize()),
            elapsed_s: self.started.elapsed().as_secs_f64(),
            warnings: self.warnings,
            error: error.map(|e| format!("{e:#}")),
            summary: self.summary,
            outputs: self.outputs,
        };
        let path = self.root.join(REPORT_FILE);
        std::fs::write(&path, toml::to_string(&report)?).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}
