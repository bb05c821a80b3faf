//! Output tree: `out/{task}/{language}-{domain}/k{K}/seed{S}/`.

use std::fs;
use std::path::{Path, PathBuf};

use dimabsa_core::TaskKind;

use crate::config::DatasetSpec;
use crate::error::{CliError, Result};

pub const GENERATIONS: &str = "generations.jsonl";
pub const RUNS: &str = "runs.jsonl";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const SUPPORT: &str = "support.jsonl";
pub const REPORT: &str = "report.json";
pub const SIGNIFICANCE: &str = "significance.json";
pub const RESULTS: &str = "results.json";

#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
    task: TaskKind,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>, task: TaskKind) -> Self {
        Self { root: root.into(), task }
    }

    pub fn task_dir(&self) -> PathBuf {
        self.root.join(self.task.as_str())
    }

    pub fn dataset_dir(&self, ds: &DatasetSpec) -> PathBuf {
        self.task_dir().join(ds.cell_name())
    }

    pub fn cell_dir(&self, ds: &DatasetSpec, k: usize, seed: u64) -> PathBuf {
        self.dataset_dir(ds).join(format!("k{k}")).join(format!("seed{seed}"))
    }

    pub fn cell_file(&self, ds: &DatasetSpec, k: usize, seed: u64, name: &str) -> PathBuf {
        self.cell_dir(ds, k, seed).join(name)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

pub fn require_file(path: &Path, stage: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{} not found; run `{stage}` first", path.display())))
    }
}
