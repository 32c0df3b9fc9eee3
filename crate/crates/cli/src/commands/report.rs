use std::io::Write;

use gap_core::experiments::CheckKind;
use serde::Serialize;

use super::{aligned, emit};
use crate::bundle::{find_summaries, read_summary};
use crate::cli::{Format, ReportArgs};
use crate::error::{exit, CliError, CliResult};

#[derive(Debug, Serialize)]
struct Line {
    tag: String,
    seed: u64,
    check: String,
    kind: CheckKind,
    passed: bool,
    detail: String,
}

pub fn run(a: &ReportArgs, out: &mut dyn Write) -> CliResult<i32> {
    let paths = find_summaries(&a.path)?;
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no result bundles under {}", a.path.display())));
    }
    let mut lines = Vec::new();
    for p in &paths {
        let s = read_summary(p)?;
        lines.extend(s.checks.into_iter().map(|c| Line {
            tag: s.tag.clone(),
            seed: s.seed,
            check: c.name,
            kind: c.kind,
            passed: c.passed,
            detail: c.detail,
        }));
    }
    // Stable: checks keep their recorded order within a bundle.
    lines.sort_by(|x, y| (&x.tag, x.seed).cmp(&(&y.tag, y.seed)));

    let kind = |k: CheckKind| serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    let bytes = match a.format {
        Some(Format::Summary) => {
            let mut v = serde_json::to_vec_pretty(&lines)?;
            v.push(b'\n');
            v
        }
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["tag", "seed", "check", "kind", "passed", "detail"])?;
            for l in &lines {
                w.write_record([l.tag.clone(), l.seed.to_string(), l.check.clone(), kind(l.kind), l.passed.to_string(), l.detail.clone()])?;
            }
            w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))?
        }
        None => {
            let header: Vec<String> = ["tag", "check", "kind", "result", "detail"].iter().map(|s| s.to_string()).collect();
            let rows: Vec<Vec<String>> = lines
                .iter()
                .map(|l| {
                    vec![
                        l.tag.clone(),
                        l.check.clone(),
                        kind(l.kind),
                        if l.passed { "PASS" } else { "FAIL" }.to_string(),
                        l.detail.clone(),
                    ]
                })
                .collect();
            let failed = lines.iter().filter(|l| !l.passed).count();
            let mut s = aligned(&header, &rows);
            s.push_str(&format!("{} checks, {failed} failed\n", lines.len()));
            s.into_bytes()
        }
    };
    emit(out, &bytes)?;
    Ok(exit::OK)
}
