use std::path::{Path, PathBuf};

use gap_core::experiments::ExperimentConfig;
use gap_core::measures::{MeasureSpec, RhoSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Top-level file for `gaplab run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// Thread count; never affects results.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub experiment: ExperimentConfig,
}

fn one() -> usize {
    1
}

fn default_measure() -> MeasureSpec {
    MeasureSpec::Gap {}
}

/// Top-level file for `gaplab sample`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    pub d_a: usize,
    #[serde(default = "one")]
    pub d_b: usize,
    #[serde(default = "RhoSpec::uniform")]
    pub rho: RhoSpec,
    #[serde(default = "default_measure")]
    pub measure: MeasureSpec,
    pub samples: u64,
}

/// Reads a TOML (default) or JSON (`.json`) config, reporting the path of
/// the offending field on error.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, path)
}

pub fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> CliResult<T> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let err = |field: String, message: String| CliError::Config { path: path.to_path_buf(), field, message };
    if is_json {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| err(e.path().to_string(), e.inner().to_string()))
    } else {
        let de = toml::Deserializer::parse(text).map_err(|e| err(".".into(), e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| err(e.path().to_string(), e.inner().to_string()))
    }
}

/// SHA-256 of the canonical JSON form of `value` (sorted keys, defaults filled in).
pub fn hash_json(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("JSON values serialise");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
