//! Experiment configuration (TOML).
//!
//! ```toml
//! task = "DimASTE"
//! k_values = [1, 5, 10, 15]
//! seeds = [0, 1, 2, 3, 4]
//! out = "out"
//! cache = ".cache"
//!
//! [[datasets]]
//! language = "eng"
//! domain = "restaurant"
//! path = "data/eng_restaurant_test.jsonl"
//! train = "data/eng_restaurant_train.jsonl"   # DimASQP category whitelist source
//!
//! [endpoint]
//! base_url = "http://localhost:8000/v1"
//! model = "my-model"
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use dimabsa_client::{DEFAULT_MAX_OUTPUT_TOKENS, DEFAULT_TEMPERATURE};
use dimabsa_core::TaskKind;
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_K_VALUES: [usize; 4] = [1, 5, 10, 15];
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
/// Run `i` of seed `s` is sampled with endpoint seed `s * stride + i`.
pub const DEFAULT_SEED_STRIDE: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub language: String,
    pub domain: String,
    /// Instances to run on, with gold tuples for evaluation.
    pub path: PathBuf,
    /// Training split whose gold categories form the DimASQP whitelist.
    #[serde(default)]
    pub train: Option<PathBuf>,
    /// Whitelist file, one label per line; replaces the training-derived set.
    #[serde(default)]
    pub categories: Option<PathBuf>,
}

impl DatasetSpec {
    pub fn cell_name(&self) -> String {
        format!("{}-{}", self.language, self.domain)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    #[serde(default)]
    pub base_url: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_model() -> String {
    "default".into()
}
fn default_in_flight() -> usize {
    16
}
fn default_attempts() -> u32 {
    4
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn default_max_tokens() -> u32 {
    DEFAULT_MAX_OUTPUT_TOKENS
}
fn default_timeout() -> u64 {
    120
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: None,
            api_key_env: None,
            model: default_model(),
            max_in_flight: default_in_flight(),
            max_attempts: default_attempts(),
            backoff_ms: default_backoff_ms(),
            temperature: default_temperature(),
            max_output_tokens: default_max_tokens(),
            timeout_secs: default_timeout(),
        }
    }
}

fn default_k_values() -> Vec<usize> {
    DEFAULT_K_VALUES.to_vec()
}
fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}
fn default_stride() -> u64 {
    DEFAULT_SEED_STRIDE
}
fn default_alpha() -> f64 {
    dimabsa_stats::DEFAULT_ALPHA
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_stride")]
    pub seed_stride: u64,
    /// Fixed vote threshold for every k; by default a strict majority of the runs voted over.
    #[serde(default)]
    pub threshold: Option<usize>,
    /// Abort instead of voting over fewer runs when some generations failed.
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub welch: bool,
    /// Exempt the literal NULL from the span check.
    #[serde(default = "default_true")]
    pub allow_placeholder: bool,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    /// Prompt template file with {{slot}} placeholders; built-in English template otherwise.
    #[serde(default)]
    pub template: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: EndpointConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        for p in [&mut self.cache, &mut self.template].into_iter().flatten() {
            fix(p);
        }
        for d in &mut self.datasets {
            fix(&mut d.path);
            for p in [&mut d.train, &mut d.categories].into_iter().flatten() {
                fix(p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.datasets.is_empty() {
            return bad("no [[datasets]] configured".into());
        }
        let mut names = HashSet::new();
        for d in &self.datasets {
            if d.language.is_empty() || d.domain.is_empty() {
                return bad("dataset language and domain must be non-empty".into());
            }
            if !names.insert(d.cell_name()) {
                return bad(format!("dataset {} listed twice", d.cell_name()));
            }
            if self.task.has_category() && d.train.is_none() && d.categories.is_none() {
                return bad(format!("{}: DimASQP needs `train` or `categories` for the category whitelist", d.cell_name()));
            }
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return bad("k_values must be non-empty and every k at least 1".into());
        }
        if self.k_values.iter().collect::<HashSet<_>>().len() != self.k_values.len() {
            return bad("k_values must be distinct".into());
        }
        if self.seeds.is_empty() || self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return bad("seeds must be non-empty and distinct".into());
        }
        if self.seed_stride < self.k_max() as u64 {
            return bad(format!("seed_stride {} is smaller than the largest k {}", self.seed_stride, self.k_max()));
        }
        if let Some(t) = self.threshold {
            let k_min = *self.k_values.iter().min().expect("non-empty");
            if t == 0 || t > k_min {
                return bad(format!("threshold {t} must lie in 1..={k_min} (the smallest k)"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        let e = &self.endpoint;
        if e.max_in_flight == 0 || e.max_attempts == 0 {
            return bad("endpoint.max_in_flight and endpoint.max_attempts must be at least 1".into());
        }
        if !(e.temperature >= 0.0 && e.temperature.is_finite()) {
            return bad(format!("temperature {} must be a non-negative number", e.temperature));
        }
        Ok(())
    }

    pub fn k_max(&self) -> usize {
        self.k_values.iter().copied().max().unwrap_or(1)
    }

    /// Endpoint seed of run 0 for experiment seed `seed`.
    pub fn base_seed(&self, seed: u64) -> u64 {
        seed * self.seed_stride
    }

    /// Conditions sorted by k, as they appear in tables.
    pub fn sorted_k(&self) -> Vec<usize> {
        let mut k = self.k_values.clone();
        k.sort_unstable();
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
task = "DimASTE"
[[datasets]]
language = "eng"
domain = "restaurant"
path = "data.jsonl"
"#;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(c.k_values, vec![1, 5, 10, 15]);
        assert_eq!(c.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!(c.datasets[0].path, PathBuf::from("/base/data.jsonl"));
        assert_eq!(c.out, PathBuf::from("/base/out"));
        assert_eq!(c.endpoint.temperature, 0.8);
        assert_eq!(c.endpoint.max_output_tokens, 512);
        assert_eq!(c.base_seed(3), 3000);
        assert!(c.allow_placeholder);
    }

    #[test]
    fn rejects_bad_grids() {
        for extra in [
            "k_values = [0, 5]",
            "k_values = [5, 5]",
            "seeds = [1, 1]",
            "seeds = []",
            "threshold = 2\nk_values = [1, 5]",
            "alpha = 1.5",
            "seed_stride = 3\nk_values = [1, 5]",
            "unknown_key = 1",
        ] {
            let text = format!("{extra}\n{MINIMAL}");
            assert!(matches!(ExperimentConfig::from_toml(&text, Path::new(".")), Err(CliError::Config(_))), "{extra}");
        }
    }

    #[test]
    fn asqp_needs_whitelist_source() {
        let text = MINIMAL.replace("DimASTE", "DimASQP");
        assert!(ExperimentConfig::from_toml(&text, Path::new(".")).is_err());
        let text = format!("{text}train = \"train.jsonl\"\n");
        assert!(ExperimentConfig::from_toml(&text, Path::new(".")).is_ok());
    }
}
