use serde::{Deserialize, Serialize};

use super::common::{check_samples, default_rho, Grid, ObservableSpec};
use super::engine::{sub_purpose, Engine};
use super::record::{make_row, tail_rows, CheckKind, ExperimentRecord, Table};
use crate::linalg::{operator_norm, trace_norm_hermitian, DensityMatrix, HilbertDim};
use crate::measures::{sample_uniform_sphere, truncate_density, GapSampler, RhoSpec};
use crate::moments::bounds::BoundSpec;
use crate::rng::purpose;
use crate::stats::{ks_two_sample, Moments, Summary};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// `v ↦ ⟨v|B|v⟩` for Hermitian `B`, with a fast path for diagonal `B`.
#[derive(Debug, Clone)]
pub(crate) enum QuadForm {
    Diagonal(Vec<f64>),
    Dense(CMatrix),
}

impl QuadForm {
    pub fn new(b: &CMatrix) -> Self {
        let d = b.nrows();
        let off_diagonal = (0..d).any(|i| (0..d).any(|j| i != j && b[(i, j)] != Complex64::new(0.0, 0.0)));
        if off_diagonal {
            QuadForm::Dense(b.clone())
        } else {
            QuadForm::Diagonal((0..d).map(|i| b[(i, i)].re).collect())
        }
    }

    pub fn eval(&self, v: &CVector) -> f64 {
        match self {
            QuadForm::Diagonal(w) => w.iter().zip(v.iter()).map(|(w, z)| w * z.norm_sqr()).sum(),
            QuadForm::Dense(b) => v.dotc(&(b * v)).re,
        }
    }
}

/// `tr(ρB)` from the eigen-frame matrix `B' = U†BU`.
fn expectation_in_frame(p: &[f64], b_frame: &CMatrix) -> f64 {
    p.iter().enumerate().map(|(n, pn)| pn * b_frame[(n, n)].re).sum()
}

fn all_equal(p: &[f64]) -> bool {
    p.iter().all(|x| (x - p[0]).abs() < 1e-12)
}

/// Tail of `|⟨ψ|B|ψ⟩ − GAP(ρ)(f)|` against Lévy's lemma for GAP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyConfig {
    pub dim: usize,
    #[serde(default = "default_rho")]
    pub rho: RhoSpec,
    #[serde(default)]
    pub observable: ObservableSpec,
    /// Total budget; half estimates `GAP(ρ)(f)`, half feeds the tails.
    pub samples: u64,
    #[serde(default)]
    pub eps: Grid,
    /// Also sample the uniform measure and compare (meaningful for `ρ ∝ I`).
    #[serde(default)]
    pub compare_uniform: bool,
    /// Ranks `n` of truncated states `ρ_n` to rerun under.
    #[serde(default)]
    pub truncation: Vec<usize>,
}

pub fn run_levy_gap(cfg: &LevyConfig, engine: &Engine) -> Result<ExperimentRecord> {
    if cfg.samples < 2 {
        return Err(Error::InvalidParameter("levy_gap needs samples >= 2".into()));
    }
    let grid = cfg.eps.points()?;
    let shape = HilbertDim::flat(cfg.dim)?;
    let rho = cfg.rho.build(shape, &mut engine.setup_stream(purpose::SETUP))?;
    let b = cfg.observable.build(cfg.dim, &mut engine.setup_stream(purpose::OBSERVABLE))?;
    let b_norm = operator_norm(&b);
    let eta = 2.0 * b_norm;
    let frame = QuadForm::new(&rho.to_eigen_frame(&b));
    let b_frame = rho.to_eigen_frame(&b);
    let exact = expectation_in_frame(rho.eigenvalues(), &b_frame);

    let mut rec = ExperimentRecord::new("levy_gap", cfg, engine.seed());
    let n_ref = cfg.samples / 2;
    let n_tail = cfg.samples - n_ref;
    let sampler = GapSampler::new(&rho);
    let f_of = |rng: &mut crate::rng::Stream| frame.eval(&sampler.gap_eigen(rng));
    let reference = Moments::from_slice(&engine.map_samples(purpose::REFERENCE, n_ref, f_of));
    let values = engine.map_samples(purpose::SAMPLES, n_tail, f_of);
    rec.samples += cfg.samples;
    rec.metric("exact_mean", exact);
    rec.metric("reference_mean", reference.mean);
    rec.metric("reference_sem", reference.sem());
    rec.metric("eta", eta);
    push_mean_check(&mut rec, "reference_mean", reference.mean, reference.sem(), exact);

    let devs: Vec<f64> = values.iter().map(|f| (f - reference.mean).abs()).collect();
    let norm = rho.norm();
    let stat = "observable_deviation";
    rec.tails.extend(tail_rows("gap", stat, "eps", &devs, &grid, |eps| Some(BoundSpec::LevyGap { eps, eta, rho_norm: norm }), true)?);
    rec.tails.extend(tail_rows("gap", stat, "eps", &devs, &grid, |eps| Some(BoundSpec::LevyB { eps, b_norm, rho_norm: norm }), true)?);
    rec.summaries.insert(format!("{stat}[gap]"), Summary::of(&devs));

    if cfg.compare_uniform {
        let direct = QuadForm::new(&b);
        let uniform_mean = (0..cfg.dim).map(|i| b[(i, i)].re).sum::<f64>() / cfg.dim as f64;
        let uvals = engine.map_samples(sub_purpose(purpose::SAMPLES, 0), n_tail, |rng| {
            direct.eval(sample_uniform_sphere(shape, rng).amplitudes())
        });
        rec.samples += n_tail;
        let udevs: Vec<f64> = uvals.iter().map(|f| (f - uniform_mean).abs()).collect();
        let dim = cfg.dim as f64;
        rec.tails.extend(tail_rows("uniform", stat, "eps", &udevs, &grid, |eps| Some(BoundSpec::UnifLevy { eps, eta, dim }), true)?);
        rec.summaries.insert(format!("{stat}[uniform]"), Summary::of(&udevs));
        let ks = ks_two_sample(&values, &uvals);
        rec.metric("ks_uniform_statistic", ks.statistic);
        rec.metric("ks_uniform_p", ks.p_value);
        if all_equal(rho.eigenvalues()) {
            rec.check(
                "gap_matches_uniform",
                CheckKind::Oracle,
                ks.p_value > 0.01,
                format!("two-sample KS D={:.4}, p={:.4}", ks.statistic, ks.p_value),
            );
        }
    }

    if !cfg.truncation.is_empty() {
        truncation_sweep(cfg, engine, &rho, &b_frame, &frame, &mut rec)?;
    }
    rec.add_soundness_check();
    Ok(rec)
}

fn push_mean_check(rec: &mut ExperimentRecord, name: &str, mean: f64, sem: f64, exact: f64) {
    let diff = (mean - exact).abs();
    let ok = diff <= 4.0 * sem || diff < 1e-12;
    rec.check(name, CheckKind::Oracle, ok, format!("MC {mean:.6} ± {sem:.2e} vs exact {exact:.6}"));
}

/// Means under `GAP(ρ_n)` approach the `GAP(ρ)` value as `n → D`.
fn truncation_sweep(
    cfg: &LevyConfig,
    engine: &Engine,
    rho: &DensityMatrix,
    b_frame: &CMatrix,
    frame: &QuadForm,
    rec: &mut ExperimentRecord,
) -> Result<()> {
    let mut ranks = cfg.truncation.clone();
    ranks.sort_unstable();
    ranks.dedup();
    let exact_full = expectation_in_frame(rho.eigenvalues(), b_frame);
    let n = (cfg.samples / 2).max(1);
    let mut table = Table::new("truncation", &["rank", "trace_distance", "mean", "sem", "exact", "gap_to_full"]);
    let mut distances = Vec::new();
    for (i, &rank) in ranks.iter().enumerate() {
        let rho_n = truncate_density(rho, rank)?;
        let dist = trace_norm_hermitian(&(rho_n.matrix() - rho.matrix()));
        let sampler = GapSampler::new(&rho_n);
        let m = Moments::from_slice(&engine.map_samples(sub_purpose(purpose::SAMPLES, 100 + i as u64), n, |rng| {
            frame.eval(&sampler.gap_eigen(rng))
        }));
        rec.samples += n;
        let exact_n = expectation_in_frame(rho_n.eigenvalues(), b_frame);
        table.push(vec![rank.into(), dist.into(), m.mean.into(), m.sem().into(), exact_n.into(), (m.mean - exact_full).abs().into()]);
        push_mean_check(rec, &format!("truncated_mean[n={rank}]"), m.mean, m.sem(), exact_n);
        if rank == cfg.dim {
            push_mean_check(rec, "truncation_limit", m.mean, m.sem(), exact_full);
        }
        distances.push(dist);
    }
    let monotone = distances.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    rec.check("truncation_distance_monotone", CheckKind::Trend, monotone, format!("{distances:?}"));
    rec.tables.push(table);
    Ok(())
}

fn default_radii() -> Grid {
    Grid::Values(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7])
}

/// Concentration of `f = Re⟨φ, ·⟩` under `G(ρ)` and `GA(ρ)`, and the
/// small-norm tail of `GA(ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConcentrationConfig {
    pub dim: usize,
    #[serde(default = "default_rho")]
    pub rho: RhoSpec,
    pub samples: u64,
    #[serde(default)]
    pub eps: Grid,
    #[serde(default = "default_radii")]
    pub radii: Grid,
}

pub fn run_gaussian_concentration(cfg: &GaussianConcentrationConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    let grid = cfg.eps.points()?;
    let radii = cfg.radii.points()?;
    let shape = HilbertDim::flat(cfg.dim)?;
    let rho = cfg.rho.build(shape, &mut engine.setup_stream(purpose::SETUP))?;
    let phi = {
        let mut rng = engine.setup_stream(purpose::OBSERVABLE);
        let v = sample_uniform_sphere(shape, &mut rng);
        rho.to_eigen_coords(v.amplitudes())
    };
    let sampler = GapSampler::new(&rho);
    let norm = rho.norm();
    let eta = 1.0;
    let f = |c: &CVector| phi.dotc(c).re;

    let mut rec = ExperimentRecord::new("gaussian_concentration", cfg, engine.seed());
    let g: Vec<(f64, f64)> = engine.map_samples(sub_purpose(purpose::SAMPLES, 0), cfg.samples, |rng| {
        let c = sampler.gaussian_eigen(rng);
        (f(&c), c.norm_squared())
    });
    let ga: Vec<(f64, f64)> = engine.map_samples(sub_purpose(purpose::SAMPLES, 1), cfg.samples, |rng| {
        let c = sampler.ga_eigen(rng);
        (f(&c), c.norm_squared())
    });
    rec.samples += 2 * cfg.samples;

    // Both laws are symmetric under ψ ↦ −ψ, so E f = 0 exactly.
    let stat = "lipschitz_deviation";
    let g_dev: Vec<f64> = g.iter().map(|x| x.0.abs()).collect();
    let ga_dev: Vec<f64> = ga.iter().map(|x| x.0.abs()).collect();
    rec.tails.extend(tail_rows("gaussian", stat, "eps", &g_dev, &grid, |eps| Some(BoundSpec::GaussConc { eps, eta, rho_norm: norm }), true)?);
    rec.tails.extend(tail_rows("gaussian_adjusted", stat, "eps", &ga_dev, &grid, |eps| Some(BoundSpec::GaConc { eps, eta, rho_norm: norm }), true)?);
    for &r in &radii {
        let below = ga.iter().filter(|x| x.1 < r * r).count() as u64;
        rec.tails.push(make_row("gaussian_adjusted", "norm_below", "r", r, cfg.samples, below, Some(BoundSpec::GaTail { r, rho_norm: norm }), true)?);
    }
    rec.summaries.insert(format!("{stat}[gaussian]"), Summary::of(&g_dev));
    rec.summaries.insert(format!("{stat}[gaussian_adjusted]"), Summary::of(&ga_dev));

    let purity = rho.purity();
    for (name, xs, sq_exact) in [("gaussian", &g, 1.0), ("gaussian_adjusted", &ga, 1.0 + purity)] {
        let fm = Moments::from_slice(&xs.iter().map(|x| x.0).collect::<Vec<_>>());
        push_mean_check(&mut rec, &format!("mean_f[{name}]"), fm.mean, fm.sem(), 0.0);
        let nm = Moments::from_slice(&xs.iter().map(|x| x.1).collect::<Vec<_>>());
        push_mean_check(&mut rec, &format!("mean_norm_sq[{name}]"), nm.mean, nm.sem(), sq_exact);
        rec.metric(format!("mean_norm_sq[{name}]"), nm.mean);
    }
    rec.add_soundness_check();
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Spectrum;

    fn levy(dim: usize, observable: ObservableSpec) -> LevyConfig {
        LevyConfig {
            dim,
            rho: RhoSpec::uniform(),
            observable,
            samples: 4000,
            eps: Grid::default(),
            compare_uniform: false,
            truncation: vec![],
        }
    }

    #[test]
    fn identity_observable_has_no_deviation() {
        let rec = run_levy_gap(&levy(16, ObservableSpec::Projector { rank: 16 }), &Engine::new(4, 1).unwrap()).unwrap();
        assert!(rec.summaries["observable_deviation[gap]"].max < 1e-12);
        assert!(rec.passed());
    }

    #[test]
    fn uniform_rho_matches_uniform_sampler() {
        let mut cfg = levy(64, ObservableSpec::SignDiagonal {});
        cfg.compare_uniform = true;
        let rec = run_levy_gap(&cfg, &Engine::new(5, 2).unwrap()).unwrap();
        assert!(rec.passed(), "{:?}", rec.failed_checks());
        assert!(rec.checks.iter().any(|c| c.name == "gap_matches_uniform"));
    }

    #[test]
    fn truncation_converges() {
        let mut cfg = levy(12, ObservableSpec::RandomHermitian {});
        cfg.rho = RhoSpec::diagonal(Spectrum::Thermal { beta: 1.5, energies: None });
        cfg.truncation = vec![3, 6, 12];
        let rec = run_levy_gap(&cfg, &Engine::new(6, 1).unwrap()).unwrap();
        assert!(rec.passed(), "{:?}", rec.failed_checks());
        assert_eq!(rec.tables[0].rows.len(), 3);
    }

    #[test]
    fn gaussian_tails_are_sound() {
        let cfg = GaussianConcentrationConfig { dim: 32, rho: RhoSpec::uniform(), samples: 5000, eps: Grid::default(), radii: default_radii() };
        let rec = run_gaussian_concentration(&cfg, &Engine::new(7, 1).unwrap()).unwrap();
        assert!(rec.passed(), "{:?}", rec.failed_checks());
        assert_eq!(rec.tails.len(), 16 + 16 + 7);
    }
}
