//! The four subcommands. Each writes its primary outputs, then a manifest,
//! and returns the lines to print.

mod corrector;
mod fieldcheck;
mod limitlaw;
mod sweep;

use std::path::PathBuf;

use homlab::Execution;

use crate::config::LoadedConfig;
use crate::output::RunManifest;

pub use corrector::{run_corrector, CorrectorSummary};
pub use fieldcheck::{run_fieldcheck, FieldcheckReport};
pub use limitlaw::{run_limitlaw, LimitLawReport};
pub use sweep::{run_sweep_command, SweepSummary};

/// Seed streams below the base seed, kept distinct per stage.
pub const LIMIT_STREAM: u64 = 0x4c49_4d49;
pub const FIELDCHECK_STREAM: u64 = 0x4649_454c;

pub struct Context {
    pub loaded: LoadedConfig,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Context {
    pub fn execution(&self) -> Execution {
        if self.jobs > 1 {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub lines: Vec<String>,
}

/// One pass/fail judgement against an expected behaviour.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}
