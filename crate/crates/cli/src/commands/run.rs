use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use gap_core::experiments::{default_workers, Engine};

use super::emit;
use crate::bundle::{write_bundle, SUMMARY_FILE, TAILS_FILE};
use crate::cli::{Format, RunArgs};
use crate::config::{load, RunConfig};
use crate::error::{exit, CliError, CliResult};

pub fn run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let cfg: RunConfig = load(&a.config)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let workers = a.workers.or(cfg.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(CliError::Usage("--workers must be >= 1".into()));
    }
    let tag = cfg.experiment.tag();
    let dir = a.out_dir.clone().or(cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("results").join(tag));

    let start = Instant::now();
    let record = cfg.experiment.run(&Engine::new(seed, workers)?)?;
    let elapsed = start.elapsed();
    let bundle = write_bundle(&dir, &cfg.experiment, &record)?;
    let s = &bundle.summary;

    let passed = s.checks.iter().filter(|c| c.passed).count();
    match a.format {
        Some(Format::Csv) => {
            let bytes = std::fs::read(dir.join(TAILS_FILE)).map_err(|e| CliError::io(dir.join(TAILS_FILE), e))?;
            emit(out, &bytes)?;
        }
        Some(Format::Summary) => {
            let bytes = std::fs::read(dir.join(SUMMARY_FILE)).map_err(|e| CliError::io(dir.join(SUMMARY_FILE), e))?;
            emit(out, &bytes)?;
        }
        None => {
            let line = format!(
                "{tag} seed={seed} samples={} checks={passed}/{} soundness={} -> {}\n",
                s.samples,
                s.checks.len(),
                if s.soundness_passed { "ok" } else { "FAIL" },
                dir.display()
            );
            emit(out, line.as_bytes())?;
        }
    }
    // Wall-clock goes to stderr only, so bundles stay byte-identical.
    let _ = writeln!(err, "{tag}: {:.2} s on {workers} worker(s)", elapsed.as_secs_f64());
    for c in s.checks.iter().filter(|c| !c.passed) {
        let _ = writeln!(err, "FAIL {} [{:?}]: {}", c.name, c.kind, c.detail);
    }
    Ok(if !s.soundness_passed {
        exit::SOUNDNESS
    } else if a.strict && !s.passed {
        exit::CHECK
    } else {
        exit::OK
    })
}
