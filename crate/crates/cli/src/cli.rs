use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gaplab", version, about = "Typicality experiments for GAP measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate tail bounds over parameter grids, or locate the crossover
    /// between the polynomial and exponential bounds.
    Bounds(BoundsArgs),
    /// Run an experiment config and write a result bundle.
    Run(RunArgs),
    /// Draw raw samples from a measure.
    Sample(SampleArgs),
    /// Re-derive config hashes and checksums of written results.
    Verify(VerifyArgs),
    /// Tabulate the checks of one or more result bundles.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// One eigenvalue `1/√D`, the rest equal.
    Spike,
    /// `ρ = I/D`.
    Uniform,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Bound tags to evaluate (comma separated). Default: every bound whose
    /// parameters are all given.
    #[arg(long, value_delimiter = ',')]
    pub bound: Vec<String>,
    #[arg(long = "d-a", value_delimiter = ',')]
    pub d_a: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub dim: Vec<f64>,
    #[arg(long = "d-r", value_delimiter = ',')]
    pub d_r: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    #[arg(long = "rho-norm", value_delimiter = ',')]
    pub rho_norm: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub purity: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[arg(long = "b-norm", value_delimiter = ',')]
    pub b_norm: Vec<f64>,
    #[arg(long = "a-norm", value_delimiter = ',')]
    pub a_norm: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    /// Solve for the range of `D` where the polynomial tail bound beats the
    /// exponential one (uses `--d-a` and `--eps`, defaults 1000 and 0.01).
    #[arg(long)]
    pub crossover: bool,
    #[arg(long, value_enum, default_value_t = Family::Spike)]
    pub family: Family,
    /// Upper end of the `log10 D` scan.
    #[arg(long = "max-log10", default_value_t = 60.0)]
    pub max_log10: f64,
    /// Stdout format; without it an aligned table is printed.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (TOML, or JSON with a `.json` extension).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Bundle directory (default: config `out_dir`, else `results/<kind>`).
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Echo the tails CSV or the summary JSON to stdout.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Exit with code 5 when any non-soundness check fails.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Sample config (TOML or JSON). Without it, `--measure` and `--dim`
    /// describe a measure with `ρ = I/D`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// gaussian, gaussian_adjusted, gap, uniform_sphere, delta_mixture or von_mises_fisher.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Concentration for von_mises_fisher.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// `csv` (default) writes raw samples; `summary` prints the empirical density matrix.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Bundle directory, directory of bundles, summary file, or a sample CSV.
    pub path: PathBuf,
    /// Config that produced a sample CSV.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Bundle directory or directory of bundles.
    pub path: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}
