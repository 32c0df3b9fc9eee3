use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::moments::bounds::BoundSpec;
use crate::stats::{wilson, Summary};
use crate::Result;

/// Empirical tail probability at one grid point, with its matched bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    /// Sub-run label, e.g. `d_b=256`.
    pub group: String,
    /// Deviation statistic.
    pub statistic: String,
    /// Grid parameter name (`eps` or `r`).
    pub param: String,
    pub value: f64,
    pub n: u64,
    pub exceed: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Bound tag, empty when no bound is attached.
    pub bound: String,
    pub bound_log10: Option<f64>,
    pub bound_clamped: Option<f64>,
    /// Whether this row takes part in the soundness sweep.
    pub checked: bool,
    /// `p_hat − 3·(ci_hi − ci_lo)/2 ≤ bound_clamped`.
    pub sound: bool,
}

/// Named pass/fail verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Empirical tail against a theorem bound.
    Soundness,
    /// Agreement with an exact or independent value.
    Oracle,
    /// A scaling or monotonicity trend.
    Trend,
}

impl Check {
    pub fn new(name: impl Into<String>, kind: CheckKind, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), kind, passed, detail: detail.into() }
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Extra per-experiment table (histograms, scaling series, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Column names of the tails table, in CSV order.
pub const TAIL_COLUMNS: [&str; 14] = [
    "group",
    "statistic",
    "param",
    "value",
    "n",
    "exceed",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "bound",
    "bound_log10",
    "bound_clamped",
    "checked",
    "sound",
];

impl TailRow {
    pub fn cells(&self) -> Vec<Cell> {
        let opt = |v: Option<f64>| v.map(Cell::Num).unwrap_or(Cell::Text(String::new()));
        vec![
            self.group.as_str().into(),
            self.statistic.as_str().into(),
            self.param.as_str().into(),
            self.value.into(),
            self.n.into(),
            self.exceed.into(),
            self.p_hat.into(),
            self.ci_lo.into(),
            self.ci_hi.into(),
            self.bound.as_str().into(),
            opt(self.bound_log10),
            opt(self.bound_clamped),
            self.checked.into(),
            self.sound.into(),
        ]
    }
}

/// Everything one experiment produced. Re-running the same config and seed
/// reproduces it exactly; wall-clock time is deliberately not part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub tag: String,
    pub config: serde_json::Value,
    pub seed: u64,
    /// Total Monte Carlo draws.
    pub samples: u64,
    pub tails: Vec<TailRow>,
    pub summaries: BTreeMap<String, Summary>,
    pub metrics: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl ExperimentRecord {
    pub fn new<C: Serialize>(tag: &str, config: &C, seed: u64) -> Self {
        Self {
            tag: tag.into(),
            config: serde_json::to_value(config).expect("configs serialise"),
            seed,
            samples: 0,
            tails: Vec::new(),
            summaries: BTreeMap::new(),
            metrics: BTreeMap::new(),
            tables: Vec::new(),
            checks: Vec::new(),
        }
    }

    /// Stores a metric; non-finite values are skipped so the record stays
    /// valid JSON.
    pub fn metric(&mut self, name: impl Into<String>, v: f64) {
        if v.is_finite() {
            self.metrics.insert(name.into(), v);
        }
    }

    pub fn check(&mut self, name: impl Into<String>, kind: CheckKind, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, kind, passed, detail));
    }

    /// Adds the soundness check over every checked tail row.
    pub fn add_soundness_check(&mut self) {
        let checked: Vec<&TailRow> = self.tails.iter().filter(|r| r.checked).collect();
        if checked.is_empty() {
            return;
        }
        let bad: Vec<String> = checked
            .iter()
            .filter(|r| !r.sound)
            .map(|r| format!("{}/{} {}={} p_hat={} bound={:?}", r.group, r.bound, r.param, r.value, r.p_hat, r.bound_clamped))
            .collect();
        let detail = if bad.is_empty() {
            format!("{} rows, 0 violations", checked.len())
        } else {
            format!("{} rows, {} violations: {}", checked.len(), bad.len(), bad.join("; "))
        };
        self.check("soundness", CheckKind::Soundness, bad.is_empty(), detail);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn soundness_passed(&self) -> bool {
        self.checks.iter().filter(|c| c.kind == CheckKind::Soundness).all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Tails as a table with [`TAIL_COLUMNS`].
    pub fn tails_table(&self) -> Table {
        let mut t = Table::new("tails", &TAIL_COLUMNS);
        for r in &self.tails {
            t.push(r.cells());
        }
        t
    }
}

/// Tail rows of `devs` over `grid`; `bound(x)` attaches a theorem bound.
pub fn tail_rows<F>(group: &str, statistic: &str, param: &str, devs: &[f64], grid: &[f64], bound: F, checked: bool) -> Result<Vec<TailRow>>
where
    F: Fn(f64) -> Option<BoundSpec>,
{
    let mut sorted = devs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = devs.len() as u64;
    let mut rows = Vec::with_capacity(grid.len());
    for &x in grid {
        // Strict exceedance: #{dev > x}.
        let below = sorted.partition_point(|&d| d <= x) as u64;
        rows.push(make_row(group, statistic, param, x, n, n - below, bound(x), checked)?);
    }
    Ok(rows)
}

/// Row for an event counted elsewhere (e.g. `‖ψ‖ < r`).
pub fn make_row(group: &str, statistic: &str, param: &str, value: f64, n: u64, exceed: u64, bound: Option<BoundSpec>, checked: bool) -> Result<TailRow> {
    let (lo, hi) = wilson(exceed, n);
    let p_hat = if n == 0 { 0.0 } else { exceed as f64 / n as f64 };
    let (tag, log10, clamped) = match &bound {
        Some(b) => {
            let v = b.evaluate()?;
            (b.tag().to_string(), Some(v.log10()).filter(|x| x.is_finite()), Some(v.clamped))
        }
        None => (String::new(), None, None),
    };
    let sound = match clamped {
        Some(c) => p_hat - 1.5 * (hi - lo) <= c,
        None => true,
    };
    Ok(TailRow {
        group: group.into(),
        statistic: statistic.into(),
        param: param.into(),
        value,
        n,
        exceed,
        p_hat,
        ci_lo: lo,
        ci_hi: hi,
        bound: tag,
        bound_log10: log10,
        bound_clamped: clamped,
        checked: checked && bound.is_some(),
        sound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_strict_exceedances() {
        let devs = [0.1, 0.2, 0.2, 0.5];
        let rows = tail_rows("g", "s", "eps", &devs, &[0.0, 0.2, 1.0], |_| None, true).unwrap();
        assert_eq!(rows.iter().map(|r| r.exceed).collect::<Vec<_>>(), vec![4, 1, 0]);
        assert!(rows.iter().all(|r| r.ci_lo <= r.p_hat && r.p_hat <= r.ci_hi && !r.checked));
    }

    #[test]
    fn soundness_uses_three_half_widths() {
        let b = Some(BoundSpec::GaTail { r: 0.0, rho_norm: 0.01 });
        let row = make_row("g", "s", "r", 0.0, 100, 50, b.clone(), true).unwrap();
        assert!(!row.sound);
        let row = make_row("g", "s", "r", 0.0, 100, 0, b, true).unwrap();
        assert!(row.sound);
    }
}
