//! Monte Carlo experiments.
//!
//! Every experiment takes a config and an [`Engine`] and returns an
//! [`ExperimentRecord`]. Sampling is split into fixed chunks with their own
//! random streams, so a record depends only on the config and the seed.

mod born;
mod common;
mod counterexamples;
mod dynamics;
mod engine;
mod levy;
mod record;
mod typicality;
mod validation;

use serde::{Deserialize, Serialize};

pub use born::{run_conditional_born, ConditionalBornConfig};
pub use common::{GeometricGrid, Grid, ObservableSpec};
pub use counterexamples::{
    run_counterexample_delta, run_counterexample_vmf, run_theta_density, theta_cdf, theta_pdf, DeltaConfig, ThetaConfig,
    VmfConfig,
};
pub use dynamics::{run_dynamical_typicality, DynamicalConfig, HamiltonianSpec};
pub use engine::{default_workers, sub_purpose, Engine, CHUNK};
pub use levy::{run_gaussian_concentration, run_levy_gap, GaussianConcentrationConfig, LevyConfig};
pub use record::{make_row, tail_rows, Cell, Check, CheckKind, ExperimentRecord, Table, TailRow, TAIL_COLUMNS};
pub use typicality::{run_canonical_typicality, run_entropy_typicality, CanonicalConfig, EntropyConfig};
pub use validation::{
    run_density_histogram, run_fourth_moment, run_sampler_fidelity, run_variance_bound, DensityHistogramConfig,
    FourthMomentConfig, SamplerFidelityConfig, VarianceConfig,
};

use crate::Result;

/// One experiment, selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    CanonicalTypicality(CanonicalConfig),
    EntropyTypicality(EntropyConfig),
    LevyGap(LevyConfig),
    GaussianConcentration(GaussianConcentrationConfig),
    DynamicalTypicality(DynamicalConfig),
    ConditionalBorn(ConditionalBornConfig),
    CounterexampleDelta(DeltaConfig),
    CounterexampleVmf(VmfConfig),
    ThetaDensity(ThetaConfig),
    FourthMoment(FourthMomentConfig),
    VarianceBound(VarianceConfig),
    SamplerFidelity(SamplerFidelityConfig),
    DensityHistogram(DensityHistogramConfig),
}

/// Tags accepted in `kind`.
pub const EXPERIMENT_TAGS: [&str; 13] = [
    "canonical_typicality",
    "entropy_typicality",
    "levy_gap",
    "gaussian_concentration",
    "dynamical_typicality",
    "conditional_born",
    "counterexample_delta",
    "counterexample_vmf",
    "theta_density",
    "fourth_moment",
    "variance_bound",
    "sampler_fidelity",
    "density_histogram",
];

impl ExperimentConfig {
    pub fn tag(&self) -> &'static str {
        use ExperimentConfig::*;
        match self {
            CanonicalTypicality(_) => "canonical_typicality",
            EntropyTypicality(_) => "entropy_typicality",
            LevyGap(_) => "levy_gap",
            GaussianConcentration(_) => "gaussian_concentration",
            DynamicalTypicality(_) => "dynamical_typicality",
            ConditionalBorn(_) => "conditional_born",
            CounterexampleDelta(_) => "counterexample_delta",
            CounterexampleVmf(_) => "counterexample_vmf",
            ThetaDensity(_) => "theta_density",
            FourthMoment(_) => "fourth_moment",
            VarianceBound(_) => "variance_bound",
            SamplerFidelity(_) => "sampler_fidelity",
            DensityHistogram(_) => "density_histogram",
        }
    }

    pub fn run(&self, engine: &Engine) -> Result<ExperimentRecord> {
        use ExperimentConfig::*;
        match self {
            CanonicalTypicality(c) => run_canonical_typicality(c, engine),
            EntropyTypicality(c) => run_entropy_typicality(c, engine),
            LevyGap(c) => run_levy_gap(c, engine),
            GaussianConcentration(c) => run_gaussian_concentration(c, engine),
            DynamicalTypicality(c) => run_dynamical_typicality(c, engine),
            ConditionalBorn(c) => run_conditional_born(c, engine),
            CounterexampleDelta(c) => run_counterexample_delta(c, engine),
            CounterexampleVmf(c) => run_counterexample_vmf(c, engine),
            ThetaDensity(c) => run_theta_density(c, engine),
            FourthMoment(c) => run_fourth_moment(c, engine),
            VarianceBound(c) => run_variance_bound(c, engine),
            SamplerFidelity(c) => run_sampler_fidelity(c, engine),
            DensityHistogram(c) => run_density_histogram(c, engine),
        }
    }
}

/// Runs `config` with `seed` on `workers` threads.
pub fn run(config: &ExperimentConfig, seed: u64, workers: usize) -> Result<ExperimentRecord> {
    config.run(&Engine::new(seed, workers)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"kind":"theta_density","dim":64,"p":0.3,"samples":10}"#).unwrap();
        assert_eq!(cfg.tag(), "theta_density");
        assert!(EXPERIMENT_TAGS.contains(&cfg.tag()));
        let back: ExperimentConfig = serde_json::from_value(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_fields_rejected_inside_tag() {
        let r: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"kind":"theta_density","dim":64,"p":0.3,"samples":10,"bogus":1}"#);
        assert!(r.is_err());
        let r: std::result::Result<ExperimentConfig, _> = serde_json::from_str(r#"{"kind":"nope","samples":10}"#);
        assert!(r.is_err());
    }

    #[test]
    fn records_identical_across_workers() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"kind":"canonical_typicality","d_a":2,"d_b":[4,16],"samples":9000}"#,
        )
        .unwrap();
        let a = run(&cfg, 3, 1).unwrap();
        let b = run(&cfg, 3, 4).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
