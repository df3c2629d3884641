//! Output files and the run manifest.
//!
//! Every file of a stage is named `<stage>_<hash>_<seed><suffix>.<ext>`.
//! The manifest lists each file with its size and SHA-256; it is the only
//! output carrying timestamps and is excluded from determinism checks.

use std::fs;
use std::path::{Path, PathBuf};

use homlab::GridFunction;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, Format, LoadedConfig, OutputBlock, Stage};
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Base seed and the streams derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLedger {
    pub base_seed: u64,
    pub streams: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub stage_hash: String,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub jobs: usize,
    pub files: Vec<FileEntry>,
    pub seeds: SeedLedger,
}

/// Writes a stage's files and records them.
pub struct StageOutput {
    dir: PathBuf,
    stem: String,
    output: OutputBlock,
    files: Vec<FileEntry>,
    stage: Stage,
    config_hash: String,
    stage_hash: String,
    started: String,
}

/// Stem shared by all files of `stage` for this config and seed.
pub fn stem(loaded: &LoadedConfig, stage: Stage, seed: u64) -> String {
    format!("{}_{}_{}", stage.name(), loaded.stage_hash(stage), seed)
}

impl StageOutput {
    pub fn new(loaded: &LoadedConfig, stage: Stage, seed: u64, dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(StageOutput {
            dir: dir.to_path_buf(),
            stem: stem(loaded, stage, seed),
            output: loaded.config.output.clone(),
            files: Vec::new(),
            stage,
            config_hash: loaded.config_hash(),
            stage_hash: loaded.stage_hash(stage),
            started: now(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.wants(f)
    }

    pub fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}.{ext}", self.stem))
    }

    fn record(&mut self, path: PathBuf, bytes: &[u8]) -> CliResult<()> {
        fs::write(&path, bytes)?;
        let name = path.file_name().expect("file path").to_string_lossy().into_owned();
        self.files.push(FileEntry {
            path: name,
            bytes: bytes.len() as u64,
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, suffix: &str, value: &T) -> CliResult<PathBuf> {
        let path = self.path(suffix, "json");
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.record(path.clone(), text.as_bytes())?;
        Ok(path)
    }

    /// Skipped unless CSV output is enabled.
    pub fn csv(&mut self, suffix: &str, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.record(self.path(suffix, "csv"), text.as_bytes())
    }

    /// Skipped unless binary output is enabled.
    pub fn binary(&mut self, suffix: &str, f: &GridFunction) -> CliResult<()> {
        if !self.wants(Format::Bin) {
            return Ok(());
        }
        let mut bytes = Vec::new();
        f.write_binary(&mut bytes)?;
        self.record(self.path(suffix, "bin"), &bytes)
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes the manifest next to the outputs and returns it.
    pub fn finish(self, jobs: usize, seeds: SeedLedger) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            command: self.stage.name().to_string(),
            config_hash: self.config_hash,
            stage_hash: self.stage_hash,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started: self.started,
            finished: now(),
            jobs,
            files: self.files,
            seeds,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.stem));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(manifest)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Formats a float for CSV; shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
