pub mod bounds;
pub mod report;
pub mod run;
pub mod sample;
pub mod verify;

use std::io::Write;

use crate::error::{CliError, CliResult};

pub(crate) fn emit(out: &mut dyn Write, bytes: &[u8]) -> CliResult<()> {
    out.write_all(bytes).map_err(|e| CliError::io("<stdout>", e))
}

/// Left-aligned columns separated by two spaces.
pub(crate) fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(c);
            } else {
                s.push_str(&format!("{c:<w$}  "));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut s = line(header);
    for r in rows {
        s.push_str(&line(r));
    }
    s
}
