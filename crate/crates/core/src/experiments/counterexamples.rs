use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::common::{check_samples, default_rho, hermitian_part, shape, trace_distance, Grid};
use super::engine::{sub_purpose, Engine};
use super::record::{tail_rows, CheckKind, ExperimentRecord, Table};
use crate::linalg::Basis;
use crate::measures::{AtomBasis, DeltaMixture, GapSampler, RhoSpec, Spectrum, VonMisesFisher};
use crate::moments::bounds::BoundSpec;
use crate::quad::integrate;
use crate::rng::purpose;
use crate::stats::{ks_one_sample, Moments, Summary};
use crate::{Error, Result};

/// Reduced-state deviation under the delta mixture `Σ p_n δ_{|n⟩}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaConfig {
    pub d_a: usize,
    pub d_b: usize,
    #[serde(default = "default_rho")]
    pub rho: RhoSpec,
    #[serde(default)]
    pub atoms: AtomBasis,
    pub samples: u64,
    /// Fails the run unless the median deviation is below this value.
    #[serde(default)]
    pub median_below: Option<f64>,
}

const EXACT_TOL: f64 = 1e-10;

pub fn run_counterexample_delta(cfg: &DeltaConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    let shape = shape(cfg.d_a, cfg.d_b)?;
    let rho = cfg.rho.build(shape, &mut engine.setup_stream(purpose::SETUP))?;
    let mix = DeltaMixture::new(&rho, cfg.atoms, &mut engine.setup_stream(purpose::BASIS))?;
    let target = hermitian_part(&mix.rho().reduced_a_matrix());
    let d = shape.dim();
    let atom_devs: Vec<f64> = (0..d).map(|n| trace_distance(&mix.atom(n).reduced_a(), &target)).collect();

    let mut rec = ExperimentRecord::new("counterexample_delta", cfg, engine.seed());
    let weights = mix.rho().eigenvalues();
    let mut atoms = Table::new("atoms", &["atom", "weight", "deviation"]);
    for (n, (&w, &dev)) in weights.iter().zip(&atom_devs).enumerate() {
        atoms.push(vec![n.into(), w.into(), dev.into()]);
    }
    rec.tables.push(atoms);

    // Product eigenbasis: atom n is |i⟩_a|k⟩_b, so ρ_a^{|n⟩} = |i⟩⟨i| and,
    // with tr_b ρ = diag(q), the trace distance is 2(1 − q_i).
    if cfg.atoms == AtomBasis::Eigen && matches!(rho.basis(), Basis::Standard(_)) {
        let mut worst: f64 = 0.0;
        for (n, dev) in atom_devs.iter().enumerate() {
            let v = mix.rho().eigenvector(n);
            let flat = (0..d).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).expect("D >= 1");
            let i = flat / cfg.d_b;
            let expected = 2.0 * (1.0 - target[(i, i)].re);
            worst = worst.max((dev - expected).abs());
        }
        rec.metric("max_exact_error", worst);
        rec.check("product_basis_exact", CheckKind::Oracle, worst <= EXACT_TOL, format!("max |dev − 2(1 − q_i)| = {worst:.2e}"));
    }

    let devs = engine.map_samples(purpose::SAMPLES, cfg.samples, |rng| atom_devs[mix.sample_index(rng)]);
    rec.samples += cfg.samples;
    let s = Summary::of(&devs);
    rec.metric("median_deviation", s.median);
    if let Some(limit) = cfg.median_below {
        rec.check("median_below", CheckKind::Trend, s.median < limit, format!("median {:.4e}, limit {limit}", s.median));
    }
    rec.tails.extend(tail_rows("delta", "trace_norm_reduced", "eps", &devs, &Grid::default().points()?, |_| None, false)?);
    rec.summaries.insert("trace_norm_reduced[delta]".into(), s);
    Ok(rec)
}

fn default_vmf_dims() -> Vec<usize> {
    vec![64, 256, 1024]
}

fn default_kappas() -> Vec<f64> {
    vec![0.0, 1.0, 4.0, 16.0]
}

/// Tails of `|⟨μ, x⟩ − VMF(⟨μ, ·⟩)|` on real spheres, recorded next to the
/// uniform Lévy curve. Exploratory: tails carry no pass/fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmfConfig {
    #[serde(default = "default_vmf_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    pub samples: u64,
    #[serde(default)]
    pub eps: Grid,
}

pub fn run_counterexample_vmf(cfg: &VmfConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    if cfg.dims.is_empty() || cfg.kappas.is_empty() {
        return Err(Error::InvalidParameter("dims and kappas must be non-empty".into()));
    }
    let grid = cfg.eps.points()?;
    let mut rec = ExperimentRecord::new("counterexample_vmf", cfg, engine.seed());
    let mut table = Table::new("means", &["dim", "kappa", "mean", "sem", "quadrature_mean", "median_deviation", "q95_deviation"]);
    let mut sub = 0u64;
    for &dim in &cfg.dims {
        for &kappa in &cfg.kappas {
            let vmf = VonMisesFisher::along_first_axis(dim, kappa)?;
            let exact = vmf.mean_cosine()?;
            // f(x) = ⟨μ, x⟩ only depends on the cosine, drawn exactly.
            let f = engine.map_samples(sub_purpose(purpose::SAMPLES, sub), cfg.samples, |rng| vmf.sample_cosine(rng));
            sub += 1;
            rec.samples += cfg.samples;
            let m = Moments::from_slice(&f);
            let group = format!("D={dim},kappa={kappa}");
            let diff = (m.mean - exact).abs();
            rec.check(
                format!("quadrature_mean[{group}]"),
                CheckKind::Oracle,
                diff <= 4.0 * m.sem(),
                format!("MC {:.6} ± {:.1e} vs quadrature {exact:.6}", m.mean, m.sem()),
            );
            let devs: Vec<f64> = f.iter().map(|x| (x - exact).abs()).collect();
            // S^{D−1} ⊂ R^D is the unit sphere of C^{D/2}.
            let cdim = dim as f64 / 2.0;
            rec.tails.extend(tail_rows(&group, "lipschitz_deviation", "eps", &devs, &grid, |eps| Some(BoundSpec::UnifLevy { eps, eta: 1.0, dim: cdim }), false)?);
            let s = Summary::of(&devs);
            table.push(vec![dim.into(), kappa.into(), m.mean.into(), m.sem().into(), exact.into(), s.median.into(), s.q95.into()]);
            rec.summaries.insert(format!("lipschitz_deviation[{group}]"), s);
        }
    }
    rec.tables.push(table);
    Ok(rec)
}

/// Large-`D` density of `θ = arccos|⟨0|ψ⟩|` under `GAP(ρ)` for
/// `ρ = p|0⟩⟨0| + (1 − p)(I − |0⟩⟨0|)/(D − 1)`.
pub fn theta_pdf(p: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    if s <= 0.0 || c < 0.0 {
        return 0.0;
    }
    let cot2 = (c / s) * (c / s);
    let a = (1.0 - p) / p;
    let log = (2.0 * (1.0 - p) * (1.0 - p) / p).ln() + c.ln() - 5.0 * s.ln() - a * cot2;
    log.exp()
}

/// CDF of [`theta_pdf`]: with `a = (1 − p)/p` and `U = cot²θ`,
/// `(1 − p)²/p · e^{−aU} [(1 + U)/a + 1/a²]`.
pub fn theta_cdf(p: f64, theta: f64) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    if theta >= FRAC_PI_2 {
        return 1.0;
    }
    let (s, c) = theta.sin_cos();
    let u = (c / s) * (c / s);
    let a = (1.0 - p) / p;
    ((1.0 - p) * (1.0 - p) / p * (-a * u).exp() * ((1.0 + u) / a + 1.0 / (a * a))).clamp(0.0, 1.0)
}

fn default_theta_d_a() -> usize {
    2
}

fn default_bins() -> usize {
    50
}

fn default_ks_tolerance() -> f64 {
    0.02
}

/// Overlap angle with the dominant eigenvector of a near-pure `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    pub dim: usize,
    pub p: f64,
    /// `|0⟩ = |0⟩_a|0⟩_b` with `d_b = dim / d_a`, for the non-concentration statistic.
    #[serde(default = "default_theta_d_a")]
    pub d_a: usize,
    pub samples: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_ks_tolerance")]
    pub ks_tolerance: f64,
}

const NORMALIZATION_TOL: f64 = 1e-6;
/// Interquartile range of the reduced deviation that counts as "not concentrated".
const SPREAD_MIN: f64 = 0.05;

pub fn run_theta_density(cfg: &ThetaConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    if cfg.d_a == 0 || cfg.dim % cfg.d_a != 0 {
        return Err(Error::InvalidShape(format!("d_a={} must divide dim={}", cfg.d_a, cfg.dim)));
    }
    if cfg.bins == 0 {
        return Err(Error::InvalidParameter("bins must be >= 1".into()));
    }
    let shape = shape(cfg.d_a, cfg.dim / cfg.d_a)?;
    let rho = RhoSpec::diagonal(Spectrum::NearPure { p: cfg.p }).build(shape, &mut engine.setup_stream(purpose::SETUP))?;
    let target = hermitian_part(&rho.reduced_a_matrix());
    let p = cfg.p;
    let mut rec = ExperimentRecord::new("theta_density", cfg, engine.seed());

    let norm = integrate(|t| theta_pdf(p, t), 0.0, FRAC_PI_2, 1e-13, 1e-12)?;
    let norm_err = (norm.value - 1.0).abs();
    rec.metric("pdf_integral", norm.value);
    rec.check("pdf_normalized", CheckKind::Oracle, norm_err < NORMALIZATION_TOL, format!("∫ pdf = {:.12}", norm.value));

    let sampler = GapSampler::new(&rho);
    let draws: Vec<(f64, f64)> = engine.map_samples(purpose::SAMPLES, cfg.samples, |rng| {
        let psi = sampler.sample_gap(rng);
        let theta = psi.amplitudes()[0].norm().min(1.0).acos();
        (theta, trace_distance(&psi.reduced_a(), &target))
    });
    rec.samples += cfg.samples;
    let thetas: Vec<f64> = draws.iter().map(|x| x.0).collect();
    let devs: Vec<f64> = draws.iter().map(|x| x.1).collect();

    let ks = ks_one_sample(&thetas, |t| theta_cdf(p, t));
    rec.metric("ks_statistic", ks.statistic);
    rec.metric("ks_p_value", ks.p_value);
    rec.check(
        "ks_distance",
        CheckKind::Oracle,
        ks.statistic < cfg.ks_tolerance,
        format!("KS {:.5} (tolerance {})", ks.statistic, cfg.ks_tolerance),
    );

    let width = FRAC_PI_2 / cfg.bins as f64;
    let mut counts = vec![0u64; cfg.bins];
    for &t in &thetas {
        counts[((t / width) as usize).min(cfg.bins - 1)] += 1;
    }
    let mut hist = Table::new("histogram", &["lo", "hi", "count", "empirical_density", "analytic_density", "analytic_mid"]);
    let n = cfg.samples as f64;
    for (k, &c) in counts.iter().enumerate() {
        let (lo, hi) = (k as f64 * width, (k + 1) as f64 * width);
        let analytic = (theta_cdf(p, hi) - theta_cdf(p, lo)) / width;
        hist.push(vec![lo.into(), hi.into(), c.into(), (c as f64 / (n * width)).into(), analytic.into(), theta_pdf(p, 0.5 * (lo + hi)).into()]);
    }
    rec.tables.push(hist);

    let s = Summary::of(&devs);
    let iqr = s.iqr();
    rec.metric("deviation_iqr", iqr);
    if cfg.d_a >= 2 {
        rec.check("no_concentration", CheckKind::Trend, iqr > SPREAD_MIN, format!("IQR of ‖ρ_a^ψ − tr_b ρ‖_tr = {iqr:.4}"));
    }
    rec.summaries.insert("theta".into(), Summary::of(&thetas));
    rec.summaries.insert("trace_norm_reduced".into(), s);
    Ok(rec)
}
