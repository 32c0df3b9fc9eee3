use serde::{Deserialize, Serialize};

use super::common::{default_rho, shape};
use super::engine::{sub_purpose, Engine};
use super::record::{CheckKind, ExperimentRecord, Table};
use crate::linalg::HilbertDim;
use crate::measures::{born_weights, haar_conditional_amplitudes, sample_uniform_sphere, GapSampler, RhoSpec};
use crate::rng::purpose;
use crate::stats::{Moments, Summary};
use crate::{CVector, Error, Result};

fn default_functions() -> usize {
    5
}

fn default_reference_samples() -> u64 {
    200_000
}

/// `|Born_a^{ψ,B}(f) − GAP(tr_b ρ)(f)|` for `f_k(χ) = |⟨φ_k|χ⟩|²`, with
/// `ψ ~ GAP(ρ)` and a Haar basis `B` of `H_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalBornConfig {
    pub d_a: usize,
    pub d_b: Vec<usize>,
    #[serde(default = "default_rho")]
    pub rho: RhoSpec,
    /// Draws of `(ψ, B)` per `d_b`.
    pub outer: u64,
    /// Conditional samples per draw. The Born average is always also
    /// computed exactly by enumerating every outcome; with `inner` set the
    /// two are compared.
    #[serde(default)]
    pub inner: Option<u64>,
    /// Number of fixed random test vectors `φ_k`.
    #[serde(default = "default_functions")]
    pub functions: usize,
    /// Draws of `GAP(tr_b ρ)` for the reference values.
    #[serde(default = "default_reference_samples")]
    pub reference_samples: u64,
}

/// Minimum fractional drop of the median gap from the smallest to the largest `d_b`.
const TREND_DROP: f64 = 0.3;
const Z_LIMIT: f64 = 4.0;

struct OuterDraw {
    gap: f64,
    z_exceed: u64,
    z_total: u64,
}

pub fn run_conditional_born(cfg: &ConditionalBornConfig, engine: &Engine) -> Result<ExperimentRecord> {
    if cfg.outer == 0 || cfg.reference_samples < 2 || cfg.functions == 0 || cfg.d_b.is_empty() {
        return Err(Error::InvalidParameter("conditional_born needs outer >= 1, reference_samples >= 2, functions >= 1 and a d_b list".into()));
    }
    if cfg.inner == Some(0) {
        return Err(Error::InvalidParameter("inner must be >= 1 when given".into()));
    }
    let flat = HilbertDim::flat(cfg.d_a)?;
    let phis: Vec<CVector> = {
        let mut rng = engine.setup_stream(purpose::OBSERVABLE);
        (0..cfg.functions).map(|_| sample_uniform_sphere(flat, &mut rng).into_amplitudes()).collect()
    };
    let mut rec = ExperimentRecord::new("conditional_born", cfg, engine.seed());
    let mut table = Table::new("scaling", &["d_a", "d_b", "hypothesis", "median", "mean", "q25", "q75", "max"]);
    let mut medians = Vec::new();

    for (i, &d_b) in cfg.d_b.iter().enumerate() {
        let sub = i as u64;
        let group = format!("d_b={d_b}");
        let shape = shape(cfg.d_a, d_b)?;
        let hypothesis = d_b >= cfg.d_a.max(4);
        rec.metric(format!("hypothesis_holds[{group}]"), if hypothesis { 1.0 } else { 0.0 });
        let rho = cfg.rho.build(shape, &mut engine.setup_stream(sub_purpose(purpose::SETUP, sub)))?;
        let rho_a = rho.reduced_a()?;

        // Reference GAP(tr_b ρ)(f_k) by independent Monte Carlo, checked against ⟨φ_k|tr_b ρ|φ_k⟩.
        let ref_sampler = GapSampler::new(&rho_a);
        let phis_eigen: Vec<CVector> = phis.iter().map(|phi| rho_a.to_eigen_coords(phi)).collect();
        let chunks = engine.map_chunks(sub_purpose(purpose::REFERENCE, sub), cfg.reference_samples, |rng, range| {
            let mut m = vec![Moments::default(); phis_eigen.len()];
            for _ in range {
                let c = ref_sampler.gap_eigen(rng);
                for (mk, phi) in m.iter_mut().zip(&phis_eigen) {
                    mk.push(phi.dotc(&c).norm_sqr());
                }
            }
            m
        });
        let mut reference = vec![Moments::default(); phis.len()];
        for chunk in &chunks {
            for (r, c) in reference.iter_mut().zip(chunk) {
                r.merge(c);
            }
        }
        rec.samples += cfg.reference_samples;
        let rho_a_m = rho_a.matrix();
        for (k, (phi, r)) in phis.iter().zip(&reference).enumerate() {
            let exact = phi.dotc(&(rho_a_m * phi)).re;
            let diff = (r.mean - exact).abs();
            rec.check(
                format!("reference[{group},k={k}]"),
                CheckKind::Oracle,
                diff <= Z_LIMIT * r.sem() || diff < 1e-12,
                format!("MC {:.6} ± {:.1e} vs ⟨φ|tr_b ρ|φ⟩ = {exact:.6}", r.mean, r.sem()),
            );
        }
        let ref_means: Vec<f64> = reference.iter().map(|m| m.mean).collect();

        let sampler = GapSampler::new(&rho);
        let draws = engine.map_samples(sub_purpose(purpose::SAMPLES, sub), cfg.outer, |rng| {
            let psi = sampler.sample_gap(rng);
            let phi_m = haar_conditional_amplitudes(&psi, rng);
            let weights = born_weights(&phi_m);
            // g[k][m] = |⟨φ_k|φ_m⟩|² = w_m f_k(φ_m/‖φ_m‖).
            let g: Vec<Vec<f64>> = phis
                .iter()
                .map(|phi| phi_m.column_iter().map(|col| phi.dotc(&col).norm_sqr()).collect())
                .collect();
            let born: Vec<f64> = g.iter().map(|gk| gk.iter().sum()).collect();
            let gap = born.iter().zip(&ref_means).map(|(b, r)| (b - r).abs()).fold(0.0, f64::max);
            let (mut z_exceed, mut z_total) = (0, 0);
            if let Some(n) = cfg.inner {
                let total: f64 = weights.iter().sum();
                let mut cum = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in &weights {
                    acc += w;
                    cum.push(acc);
                }
                let mut est = vec![Moments::default(); phis.len()];
                for _ in 0..n {
                    let u = rand::Rng::random::<f64>(rng) * total;
                    let m = cum.partition_point(|c| *c <= u).min(weights.len() - 1);
                    for (k, e) in est.iter_mut().enumerate() {
                        e.push(if weights[m] > 0.0 { g[k][m] / weights[m] } else { 0.0 });
                    }
                }
                for (e, b) in est.iter().zip(&born) {
                    let diff = (e.mean - b / total).abs();
                    let sem = e.sem();
                    z_total += 1;
                    if diff > Z_LIMIT * sem && diff > 1e-12 {
                        z_exceed += 1;
                    }
                }
            }
            OuterDraw { gap, z_exceed, z_total }
        });
        rec.samples += cfg.outer;
        let gaps: Vec<f64> = draws.iter().map(|d| d.gap).collect();
        let s = Summary::of(&gaps);
        table.push(vec![
            cfg.d_a.into(),
            d_b.into(),
            hypothesis.into(),
            s.median.into(),
            s.mean.into(),
            s.q25.into(),
            s.q75.into(),
            s.max.into(),
        ]);
        rec.metric(format!("median[{group}]"), s.median);
        rec.summaries.insert(format!("born_gap[{group}]"), s);
        medians.push((d_b, s.median));

        if cfg.inner.is_some() {
            let exceed: u64 = draws.iter().map(|d| d.z_exceed).sum();
            let total: u64 = draws.iter().map(|d| d.z_total).sum();
            // P(|Z| > 4) ≈ 6e-5; allow one stray plus 0.1%.
            let allowed = 1 + total / 1000;
            rec.check(
                format!("sampling_matches_enumeration[{group}]"),
                CheckKind::Oracle,
                exceed <= allowed,
                format!("{exceed} of {total} estimates beyond {Z_LIMIT}σ (allowed {allowed})"),
            );
        }
    }
    rec.tables.push(table);

    let mut sorted = medians.clone();
    sorted.sort_by_key(|m| m.0);
    if sorted.len() >= 2 {
        let ((b0, m0), (b1, m1)) = (sorted[0], sorted[sorted.len() - 1]);
        if b1 > b0 {
            let drop = 1.0 - m1 / m0;
            rec.metric("median_drop", drop);
            rec.check(
                "median_decreases",
                CheckKind::Trend,
                drop >= TREND_DROP,
                format!("median {m0:.4e} at d_b={b0} -> {m1:.4e} at d_b={b1}, drop {:.1}%", 100.0 * drop),
            );
        }
    }
    Ok(rec)
}
