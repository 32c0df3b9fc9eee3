use serde::{Deserialize, Serialize};

use super::common::{check_samples, default_rho, hermitian_part, shape, trace_distance, Grid};
use super::engine::{sub_purpose, Engine};
use super::record::{tail_rows, CheckKind, ExperimentRecord, Table};
use crate::linalg::{entropy_of_spectrum, hermitian_eigen};
use crate::measures::{GapSampler, RhoSpec};
use crate::moments::bounds::BoundSpec;
use crate::rng::purpose;
use crate::stats::Summary;
use crate::{Error, Result};

/// Tail of `‖ρ_a^ψ − tr_b ρ‖_tr` under `GAP(ρ)` for a sweep over `d_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalConfig {
    pub d_a: usize,
    pub d_b: Vec<usize>,
    #[serde(default = "default_rho")]
    pub rho: RhoSpec,
    pub samples: u64,
    #[serde(default)]
    pub eps: Grid,
    /// Confidence level `δ` for the deviation-form bounds in the scaling table.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    0.05
}

/// Median ratio expected when `d_b` quadruples, and its tolerance.
const HALVING: f64 = 2.0;
const HALVING_TOL: f64 = 0.2;

pub fn run_canonical_typicality(cfg: &CanonicalConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    if cfg.d_b.is_empty() {
        return Err(Error::InvalidParameter("d_b list is empty".into()));
    }
    let grid = cfg.eps.points()?;
    let mut rec = ExperimentRecord::new("canonical_typicality", cfg, engine.seed());
    let mut scaling = Table::new(
        "scaling",
        &["d_a", "d_b", "dim", "median", "mean", "q25", "q75", "eps_exp_delta", "eps_poly_delta", "eps_unif_poly"],
    );
    let mut medians = Vec::new();
    for (i, &d_b) in cfg.d_b.iter().enumerate() {
        let sub = i as u64;
        let shape = shape(cfg.d_a, d_b)?;
        let rho = cfg.rho.build(shape, &mut engine.setup_stream(sub_purpose(purpose::SETUP, sub)))?;
        let target = hermitian_part(&rho.reduced_a_matrix());
        let sampler = GapSampler::new(&rho);
        let devs = engine.map_samples(sub_purpose(purpose::SAMPLES, sub), cfg.samples, |rng| {
            trace_distance(&sampler.sample_gap(rng).reduced_a(), &target)
        });
        rec.samples += cfg.samples;

        let group = format!("d_b={d_b}");
        let (d_a, norm, purity) = (cfg.d_a as f64, rho.norm(), rho.purity());
        let stat = "trace_norm_reduced";
        rec.tails.extend(tail_rows(&group, stat, "eps", &devs, &grid, |eps| Some(BoundSpec::ExpEps { d_a, eps, rho_norm: norm }), true)?);
        rec.tails.extend(tail_rows(&group, stat, "eps", &devs, &grid, |eps| Some(BoundSpec::PolyEps { d_a, eps, purity }), true)?);

        let s = Summary::of(&devs);
        let delta = cfg.delta;
        let exp_eps = BoundSpec::ExpDelta { d_a, delta, rho_norm: norm }.evaluate()?.raw();
        let poly_eps = BoundSpec::PolyDelta { d_a, delta, purity }.evaluate()?.raw();
        // Effective dimension 1/‖ρ‖ plays the role of d_R.
        let unif_eps = BoundSpec::UnifPoly { d_a, delta, d_r: 1.0 / norm }.evaluate()?.raw();
        scaling.push(vec![
            cfg.d_a.into(),
            d_b.into(),
            shape.dim().into(),
            s.median.into(),
            s.mean.into(),
            s.q25.into(),
            s.q75.into(),
            exp_eps.into(),
            poly_eps.into(),
            unif_eps.into(),
        ]);
        rec.metric(format!("median[{group}]"), s.median);
        rec.summaries.insert(format!("{stat}[{group}]"), s);
        medians.push((d_b, s.median));
    }
    rec.tables.push(scaling);

    for w in medians.windows(2) {
        let ((b0, m0), (b1, m1)) = (w[0], w[1]);
        if b1 == 4 * b0 {
            let ratio = m0 / m1;
            let ok = (ratio - HALVING).abs() <= HALVING_TOL * HALVING;
            rec.metric(format!("median_ratio[{b0}->{b1}]"), ratio);
            rec.check(
                format!("halving[{b0}->{b1}]"),
                CheckKind::Trend,
                ok,
                format!("median({b0})/median({b1}) = {ratio:.4}, want {HALVING} ± {:.0}%", HALVING_TOL * 100.0),
            );
        }
    }
    rec.add_soundness_check();
    Ok(rec)
}

/// `|S(ρ_a^ψ) − S(tr_b ρ)|` under `GAP(ρ)` for a sweep over `d_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub d_a: usize,
    pub d_b: Vec<usize>,
    #[serde(default = "default_rho")]
    pub rho: RhoSpec,
    pub samples: u64,
}

fn entropy_of(m: &crate::CMatrix) -> f64 {
    let (p, _) = hermitian_eigen(&hermitian_part(m));
    let p: Vec<f64> = p.into_iter().map(|x| x.max(0.0)).collect();
    entropy_of_spectrum(&p)
}

pub fn run_entropy_typicality(cfg: &EntropyConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    if cfg.d_b.is_empty() {
        return Err(Error::InvalidParameter("d_b list is empty".into()));
    }
    let mut rec = ExperimentRecord::new("entropy_typicality", cfg, engine.seed());
    let mut scaling = Table::new("scaling", &["d_a", "d_b", "target_entropy", "median", "mean", "q25", "q75", "max"]);
    let mut medians = Vec::new();
    for (i, &d_b) in cfg.d_b.iter().enumerate() {
        let sub = i as u64;
        let shape = shape(cfg.d_a, d_b)?;
        let rho = cfg.rho.build(shape, &mut engine.setup_stream(sub_purpose(purpose::SETUP, sub)))?;
        let target = entropy_of(&rho.reduced_a_matrix());
        let sampler = GapSampler::new(&rho);
        let gaps = engine.map_samples(sub_purpose(purpose::SAMPLES, sub), cfg.samples, |rng| {
            (entropy_of(&sampler.sample_gap(rng).reduced_a()) - target).abs()
        });
        rec.samples += cfg.samples;
        let s = Summary::of(&gaps);
        let group = format!("d_b={d_b}");
        scaling.push(vec![
            cfg.d_a.into(),
            d_b.into(),
            target.into(),
            s.median.into(),
            s.mean.into(),
            s.q25.into(),
            s.q75.into(),
            s.max.into(),
        ]);
        rec.metric(format!("target_entropy[{group}]"), target);
        rec.metric(format!("median[{group}]"), s.median);
        rec.summaries.insert(format!("entropy_gap[{group}]"), s);
        medians.push((d_b, s.median));
    }
    rec.tables.push(scaling);
    let mut sorted = medians.clone();
    sorted.sort_by_key(|m| m.0);
    if sorted.len() >= 2 && sorted.windows(2).all(|w| w[0].0 < w[1].0) {
        let ok = sorted.windows(2).all(|w| w[1].1 <= w[0].1);
        let series: Vec<String> = sorted.iter().map(|(b, m)| format!("{b}:{m:.3e}")).collect();
        rec.check("median_decreases", CheckKind::Trend, ok, series.join(", "));
    }
    Ok(rec)
}
