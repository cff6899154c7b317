//! Run settings: defaults, then an optional JSON config file, then flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_MIN_LOWERCASE_COUNT: u64 = 100;
pub const DEFAULT_TOP_N: usize = 100;
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;
pub const DEFAULT_MAX_STEPS: usize = 32;
pub const DEFAULT_N_RESAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_STORE: &str = "headqa-eval.sqlite";

/// Every field is optional here; absent means "not set at this layer".
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub dict_path: Option<PathBuf>,
    pub min_lowercase_count: Option<u64>,
    pub top_n: Option<usize>,
    pub answerer: Option<String>,
    pub endpoint: Option<String>,
    pub timeout_ms: Option<u64>,
    pub max_steps: Option<usize>,
    pub n_resamples: Option<usize>,
    pub seed: Option<u64>,
    pub bind: Option<String>,
    pub store_path: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&raw)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag value if given, else the config file's, else the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::Usage(format!("--{name} is required (flag or config file)")))
}
