use std::io::Write;
use std::path::Path;

use gap_core::experiments::ExperimentConfig;

use super::emit;
use super::sample::sample_config_hash;
use crate::bundle::{config_hash, find_summaries, read_summary, RunSummary, TAILS_FILE};
use crate::cli::VerifyArgs;
use crate::config::{load, sha256_hex, SampleConfig};
use crate::error::{exit, CliError, CliResult};

/// Checks the leading `config_hash`/`seed` columns and returns the data row count.
fn check_csv(bytes: &[u8], hash: &str, seed: Option<u64>, problems: &mut Vec<String>, label: &str) -> usize {
    let mut r = csv::Reader::from_reader(bytes);
    let header = match r.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            problems.push(format!("{label}: {e}"));
            return 0;
        }
    };
    if header.get(0) != Some("config_hash") || header.get(1) != Some("seed") {
        problems.push(format!("{label}: header does not start with config_hash,seed"));
        return 0;
    }
    let mut rows = 0;
    let mut first_seed: Option<String> = seed.map(|s| s.to_string());
    for rec in r.records() {
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                problems.push(format!("{label}: {e}"));
                break;
            }
        };
        rows += 1;
        if rec.get(0) != Some(hash) {
            problems.push(format!("{label}: row {rows} has config_hash {:?}, expected {hash}", rec.get(0).unwrap_or("")));
            break;
        }
        let s = rec.get(1).unwrap_or("").to_string();
        match &first_seed {
            Some(expected) if *expected != s => {
                problems.push(format!("{label}: row {rows} has seed {s}, expected {expected}"));
                break;
            }
            None => first_seed = Some(s),
            _ => {}
        }
    }
    rows
}

fn verify_bundle(summary_path: &Path, summary: &RunSummary) -> CliResult<Vec<String>> {
    let mut problems = Vec::new();
    let dir = summary_path.parent().unwrap_or(Path::new("."));
    let config: ExperimentConfig = serde_json::from_value(summary.config.clone())
        .map_err(|e| CliError::Verify(format!("{}: stored config does not parse: {e}", summary_path.display())))?;
    let hash = config_hash(&config);
    if hash != summary.config_hash {
        problems.push(format!("config hash {hash} differs from recorded {}", summary.config_hash));
    }
    if config.tag() != summary.tag {
        problems.push(format!("config kind {} differs from recorded tag {}", config.tag(), summary.tag));
    }
    if !summary.files.contains_key(TAILS_FILE) {
        problems.push(format!("{TAILS_FILE} is not listed"));
    }
    for (name, entry) in &summary.files {
        let path = dir.join(name);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        let digest = sha256_hex(&bytes);
        if digest != entry.sha256 {
            problems.push(format!("{name}: sha256 {digest} differs from recorded {}", entry.sha256));
        }
        let rows = check_csv(&bytes, &summary.config_hash, Some(summary.seed), &mut problems, name);
        if rows != entry.rows {
            problems.push(format!("{name}: {rows} rows, recorded {}", entry.rows));
        }
        if name == TAILS_FILE && rows != summary.rows.len() {
            problems.push(format!("{name}: {rows} rows but the summary lists {}", summary.rows.len()));
        }
    }
    Ok(problems)
}

pub fn run(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<i32> {
    let mut failures = Vec::new();
    let mut report = String::new();
    if let Some(cfg_path) = &a.config {
        let cfg: SampleConfig = load(cfg_path)?;
        let bytes = std::fs::read(&a.path).map_err(|e| CliError::io(&a.path, e))?;
        let mut problems = Vec::new();
        let label = a.path.display().to_string();
        let rows = check_csv(&bytes, &sample_config_hash(&cfg), cfg.seed, &mut problems, &label);
        if rows as u64 != cfg.samples {
            problems.push(format!("{label}: {rows} samples, config asks for {}", cfg.samples));
        }
        if problems.is_empty() {
            report.push_str(&format!("ok {label} ({rows} samples)\n"));
        }
        failures.extend(problems);
    } else {
        let paths = find_summaries(&a.path)?;
        if paths.is_empty() {
            return Err(CliError::Verify(format!("no {} found under {}", crate::bundle::SUMMARY_FILE, a.path.display())));
        }
        for p in paths {
            let summary = read_summary(&p)?;
            let problems = verify_bundle(&p, &summary)?;
            if problems.is_empty() {
                report.push_str(&format!("ok {} ({}, files={})\n", p.display(), summary.tag, summary.files.len()));
            }
            failures.extend(problems.into_iter().map(|m| format!("{}: {m}", p.display())));
        }
    }
    emit(out, report.as_bytes())?;
    if failures.is_empty() {
        Ok(exit::OK)
    } else {
        Err(CliError::Verify(failures.join("; ")))
    }
}
