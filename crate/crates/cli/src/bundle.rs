use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use gap_core::experiments::{Cell, Check, ExperimentConfig, ExperimentRecord, Table, TailRow};
use gap_core::stats::Summary;
use serde::{Deserialize, Serialize};

use crate::config::{hash_json, sha256_hex};
use crate::error::{CliError, CliResult};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TAILS_FILE: &str = "tails.csv";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Checksum and data-row count of one CSV in a bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub sha256: String,
    pub rows: usize,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tag: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    /// The experiment config with defaults filled in; re-runnable as is.
    pub config: serde_json::Value,
    pub samples: u64,
    pub passed: bool,
    pub soundness_passed: bool,
    pub files: BTreeMap<String, FileEntry>,
    pub rows: Vec<TailRow>,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    pub summaries: BTreeMap<String, Summary>,
}

/// Hash of an experiment config, independent of seed, workers and paths.
pub fn config_hash(config: &ExperimentConfig) -> String {
    hash_json(&serde_json::to_value(config).expect("configs serialise"))
}

/// CSV bytes with `config_hash` and `seed` leading every row.
pub fn table_csv(table: &Table, hash: &str, seed: u64) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["config_hash".to_string(), "seed".to_string()];
    header.extend(table.columns.iter().cloned());
    w.write_record(&header)?;
    let seed = seed.to_string();
    for row in &table.rows {
        let mut rec = vec![hash.to_string(), seed.clone()];
        rec.extend(row.iter().map(Cell::to_string));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn safe_name(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

/// Everything written for one run.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub summary: RunSummary,
}

/// Writes the tails CSV, one CSV per extra table and `summary.json`.
pub fn write_bundle(dir: &Path, config: &ExperimentConfig, record: &ExperimentRecord) -> CliResult<Bundle> {
    let hash = config_hash(config);
    let mut files = BTreeMap::new();
    let mut tables = vec![record.tails_table()];
    tables.extend(record.tables.iter().cloned());
    for table in &tables {
        let name = if table.name == "tails" { TAILS_FILE.to_string() } else { format!("{}.csv", safe_name(&table.name)) };
        let bytes = table_csv(table, &hash, record.seed)?;
        write_atomic(&dir.join(&name), &bytes)?;
        files.insert(name, FileEntry { sha256: sha256_hex(&bytes), rows: table.rows.len() });
    }
    let summary = RunSummary {
        tag: record.tag.clone(),
        version: VERSION.to_string(),
        seed: record.seed,
        config_hash: hash,
        config: serde_json::to_value(config)?,
        samples: record.samples,
        passed: record.passed(),
        soundness_passed: record.soundness_passed(),
        files,
        rows: record.tails.clone(),
        checks: record.checks.clone(),
        metrics: record.metrics.clone(),
        summaries: record.summaries.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    write_atomic(&dir.join(SUMMARY_FILE), &json)?;
    Ok(Bundle { dir: dir.to_path_buf(), summary })
}

pub fn read_summary(path: &Path) -> CliResult<RunSummary> {
    let text = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_slice(&text)?)
}

/// Summary files under `path`: the file itself, `path/summary.json`, or
/// `summary.json` in each immediate subdirectory, sorted.
pub fn find_summaries(path: &Path) -> CliResult<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    let direct = path.join(SUMMARY_FILE);
    if direct.is_file() {
        out.push(direct);
    }
    let entries = std::fs::read_dir(path).map_err(|e| CliError::io(path, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(path, e))?;
        let candidate = entry.path().join(SUMMARY_FILE);
        if entry.path().is_dir() && candidate.is_file() {
            out.push(candidate);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_hash_and_seed_columns() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![Cell::Int(1), Cell::Num(0.5)]);
        let bytes = table_csv(&t, "abc", 9).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "config_hash,seed,a,b\nabc,9,1,0.5\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
