use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::common::{check_samples, hermitian_part, trace_distance, SplitMatrix};
use super::engine::{sub_purpose, Engine};
use super::record::{CheckKind, ExperimentRecord, Table};
use crate::linalg::{gaussian_matrix, haar_unitary, operator_norm, DensityMatrix, HilbertDim};
use crate::measures::{gap_density, GapSampler, RhoBasis, RhoSpec, Spectrum};
use crate::moments::{variance_bound_from, KmlKernel};
use crate::quad::integrate;
use crate::rng::purpose;
use crate::stats::{chi_square, Moments};
use crate::{CMatrix, CVector, Complex64, Error, Result};

const Z_LIMIT: f64 = 4.0;

fn within(mean: f64, sem: f64, exact: f64) -> bool {
    let diff = (mean - exact).abs();
    diff <= Z_LIMIT * sem || diff < 1e-12
}

/// Merges per-chunk moment vectors in chunk order.
fn merge_all(chunks: Vec<Vec<Moments>>, len: usize) -> Vec<Moments> {
    let mut out = vec![Moments::default(); len];
    for chunk in &chunks {
        for (o, c) in out.iter_mut().zip(chunk) {
            o.merge(c);
        }
    }
    out
}

fn default_thermal() -> RhoSpec {
    RhoSpec::diagonal(Spectrum::Thermal { beta: 2.0, energies: None })
}

fn default_small_dim() -> usize {
    8
}

/// `E|c_m|²|c_l|²` under `GAP(ρ)` against the exact kernel values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourthMomentConfig {
    #[serde(default = "default_small_dim")]
    pub dim: usize,
    #[serde(default = "default_thermal")]
    pub rho: RhoSpec,
    pub samples: u64,
}

pub fn run_fourth_moment(cfg: &FourthMomentConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    let rho = cfg.rho.build(HilbertDim::flat(cfg.dim)?, &mut engine.setup_stream(purpose::SETUP))?;
    let kernel = KmlKernel::from_density(&rho)?;
    let d = cfg.dim;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|m| (m..d).map(move |l| (m, l))).collect();
    let sampler = GapSampler::new(&rho);
    let chunks = engine.map_chunks(purpose::SAMPLES, cfg.samples, |rng, range| {
        let mut acc = vec![Moments::default(); pairs.len()];
        for _ in range {
            let c = sampler.gap_eigen(rng);
            let w: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
            for (a, &(m, l)) in acc.iter_mut().zip(&pairs) {
                a.push(w[m] * w[l]);
            }
        }
        acc
    });
    let moments = merge_all(chunks, pairs.len());
    let mut rec = ExperimentRecord::new("fourth_moment", cfg, engine.seed());
    rec.samples = cfg.samples;
    let mut table = Table::new("moments", &["m", "l", "mc", "sem", "exact", "z"]);
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for (mo, &(m, l)) in moments.iter().zip(&pairs) {
        let exact = kernel.fourth_moment(m, l)?;
        let z = (mo.mean - exact) / mo.sem();
        worst = worst.max(z.abs());
        table.push(vec![m.into(), l.into(), mo.mean.into(), mo.sem().into(), exact.into(), z.into()]);
        if !within(mo.mean, mo.sem(), exact) {
            bad.push(format!("({m},{l}) z={z:.2}"));
        }
    }
    rec.tables.push(table);
    rec.metric("max_abs_z", worst);
    rec.check("fourth_moments", CheckKind::Oracle, bad.is_empty(), format!("{} pairs, max |z| = {worst:.2}; {}", pairs.len(), bad.join(", ")));
    Ok(rec)
}

fn default_var_dim() -> usize {
    64
}

fn default_trials() -> usize {
    100
}

fn default_var_samples() -> u64 {
    10_000
}

/// Random `(ρ, A)` with `‖ρ‖ < 1/4`: empirical `Var⟨ψ|A|ψ⟩` against the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceConfig {
    #[serde(default = "default_var_dim")]
    pub dim: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_var_samples")]
    pub samples: u64,
}

/// Largest eigenvalue allowed in random trials.
const P_MAX_CAP: f64 = 0.2;

/// Random spectrum `∝ exp(β g_n)` mixed toward uniform if needed so that
/// `p_max ≤ P_MAX_CAP`, in a Haar basis; `A` a scaled Ginibre matrix.
fn random_trial<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<(DensityMatrix, CMatrix)> {
    let beta = 3.0 * rng.random::<f64>();
    let w: Vec<f64> = (0..d).map(|_| (beta * rng.sample::<f64, _>(StandardNormal)).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / z).collect();
    let top = p.iter().copied().fold(0.0, f64::max);
    let uniform = 1.0 / d as f64;
    if top > P_MAX_CAP {
        let lambda = (top - P_MAX_CAP) / (top - uniform);
        p.iter_mut().for_each(|x| *x = (1.0 - lambda) * *x + lambda * uniform);
    }
    let rho = DensityMatrix::from_spectrum(p, HilbertDim::flat(d)?)?.conjugate(&haar_unitary(d, rng))?;
    let scale = 0.5 + rng.random::<f64>();
    let a = gaussian_matrix(d, d, rng) * Complex64::new(scale / (d as f64).sqrt(), 0.0);
    Ok((rho, a))
}

pub fn run_variance_bound(cfg: &VarianceConfig, engine: &Engine) -> Result<ExperimentRecord> {
    if cfg.samples < 2 || cfg.trials == 0 {
        return Err(Error::InvalidParameter("variance_bound needs samples >= 2 and trials >= 1".into()));
    }
    if cfg.dim < 5 {
        return Err(Error::InvalidParameter("variance_bound needs dim >= 5 so that ‖ρ‖ < 1/4 is possible".into()));
    }
    let d = cfg.dim;
    let mut rec = ExperimentRecord::new("variance_bound", cfg, engine.seed());
    let mut table = Table::new(
        "trials",
        &["trial", "p_max", "purity", "a_norm", "variance", "variance_sem", "bound", "mean_re", "mean_im", "exact_re", "exact_im", "sound"],
    );
    let (mut violations, mut mean_fail) = (Vec::new(), Vec::new());
    let mut worst_ratio: f64 = 0.0;
    for t in 0..cfg.trials {
        let (rho, a) = random_trial(d, &mut engine.setup_stream(sub_purpose(purpose::SETUP, t as u64)))?;
        let a_frame = SplitMatrix::from_complex(&rho.to_eigen_frame(&a));
        let sampler = GapSampler::new(&rho);
        let values: Vec<Complex64> = engine
            .map_chunks(sub_purpose(purpose::SAMPLES, t as u64), cfg.samples, |rng, range| {
                let m = (range.end - range.start) as usize;
                let mut c = SplitMatrix::zeros(d, m);
                for j in 0..m {
                    for (k, z) in sampler.gap_eigen(rng).iter().enumerate() {
                        c.set(k, j, *z);
                    }
                }
                let y = a_frame.mul(&c);
                (0..m).map(|j| (0..d).map(|k| c.get(k, j).conj() * y.get(k, j)).sum::<Complex64>()).collect::<Vec<_>>()
            })
            .into_iter()
            .flatten()
            .collect();
        rec.samples += cfg.samples;
        let re = Moments::from_slice(&values.iter().map(|z| z.re).collect::<Vec<_>>());
        let im = Moments::from_slice(&values.iter().map(|z| z.im).collect::<Vec<_>>());
        let mean = Complex64::new(re.mean, im.mean);
        let sq = Moments::from_slice(&values.iter().map(|z| (z - mean).norm_sqr()).collect::<Vec<_>>());
        let n = values.len() as f64;
        let variance = sq.mean * n / (n - 1.0);
        let var_sem = sq.sem() * n / (n - 1.0);
        let (p_max, purity, a_norm) = (rho.norm(), rho.purity(), operator_norm(&a));
        let bound = variance_bound_from(a_norm, purity, p_max)?;
        let exact = (rho.matrix() * &a).trace();
        let sound = variance - 3.0 * var_sem <= bound;
        worst_ratio = worst_ratio.max(variance / bound);
        if !sound {
            violations.push(format!("trial {t}: {variance:.4e} vs {bound:.4e}"));
        }
        if !within(re.mean, re.sem(), exact.re) || !within(im.mean, im.sem(), exact.im) {
            mean_fail.push(format!("trial {t}"));
        }
        table.push(vec![
            t.into(),
            p_max.into(),
            purity.into(),
            a_norm.into(),
            variance.into(),
            var_sem.into(),
            bound.into(),
            re.mean.into(),
            im.mean.into(),
            exact.re.into(),
            exact.im.into(),
            sound.into(),
        ]);
    }
    rec.tables.push(table);
    rec.metric("max_variance_over_bound", worst_ratio);
    rec.check(
        "variance_bound",
        CheckKind::Soundness,
        violations.is_empty(),
        format!("{} trials, {} violations, max Var/bound = {worst_ratio:.3e} {}", cfg.trials, violations.len(), violations.join("; ")),
    );
    rec.check(
        "mean_matches_trace",
        CheckKind::Oracle,
        mean_fail.is_empty(),
        format!("{} trials, {} outside {Z_LIMIT}σ {}", cfg.trials, mean_fail.len(), mean_fail.join(", ")),
    );
    Ok(rec)
}

fn default_fidelity_dim() -> usize {
    16
}

fn default_fidelity_rho() -> RhoSpec {
    RhoSpec { spectrum: Spectrum::Thermal { beta: 2.0, energies: None }, basis: RhoBasis::Haar }
}

fn default_fidelity_tol() -> f64 {
    0.05
}

/// Empirical density matrix of `GAP(ρ)`, and coordinate moments of `GAP(I/D)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerFidelityConfig {
    #[serde(default = "default_fidelity_dim")]
    pub dim: usize,
    #[serde(default = "default_fidelity_rho")]
    pub rho: RhoSpec,
    pub samples: u64,
    #[serde(default = "default_fidelity_tol")]
    pub trace_tolerance: f64,
}

pub fn run_sampler_fidelity(cfg: &SamplerFidelityConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    let d = cfg.dim;
    let shape = HilbertDim::flat(d)?;
    let rho = cfg.rho.build(shape, &mut engine.setup_stream(purpose::SETUP))?;
    let mut rec = ExperimentRecord::new("sampler_fidelity", cfg, engine.seed());

    let sampler = GapSampler::new(&rho);
    let sums = engine.map_chunks(sub_purpose(purpose::SAMPLES, 0), cfg.samples, |rng, range| {
        let mut acc = CMatrix::zeros(d, d);
        for _ in range {
            let psi = sampler.sample_gap(rng).into_amplitudes();
            acc += &psi * psi.adjoint();
        }
        acc
    });
    let mut empirical = CMatrix::zeros(d, d);
    for s in &sums {
        empirical += s;
    }
    empirical /= Complex64::new(cfg.samples as f64, 0.0);
    let dist = trace_distance(&hermitian_part(&empirical), rho.matrix());
    rec.metric("density_trace_distance", dist);
    rec.check(
        "empirical_density_matrix",
        CheckKind::Oracle,
        dist < cfg.trace_tolerance,
        format!("‖ρ̂ − ρ‖_tr = {dist:.4e} (tolerance {})", cfg.trace_tolerance),
    );

    // GAP(I/D) against the uniform-sphere moments.
    let uniform = GapSampler::new(&DensityMatrix::maximally_mixed(shape));
    let slots = 2 * d + d * (d - 1) / 2;
    let chunks = engine.map_chunks(sub_purpose(purpose::SAMPLES, 1), cfg.samples, |rng, range| {
        let mut acc = vec![Moments::default(); slots];
        for _ in range {
            let c: CVector = uniform.gap_eigen(rng);
            let w: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
            let mut s = 0;
            for n in 0..d {
                acc[s].push(w[n]);
                acc[s + 1].push(w[n] * w[n]);
                s += 2;
            }
            for n in 0..d {
                for m in (n + 1)..d {
                    acc[s].push(w[n] * w[m]);
                    s += 1;
                }
            }
        }
        acc
    });
    let moments = merge_all(chunks, slots);
    rec.samples += 2 * cfg.samples;
    let df = d as f64;
    let mut table = Table::new("uniform_moments", &["moment", "n", "m", "mc", "sem", "exact"]);
    let mut bad = Vec::new();
    let mut push = |kind: &str, n: usize, m: usize, mo: &Moments, exact: f64| {
        table.push(vec![kind.into(), n.into(), m.into(), mo.mean.into(), mo.sem().into(), exact.into()]);
        if !within(mo.mean, mo.sem(), exact) {
            bad.push(format!("{kind}({n},{m})"));
        }
    };
    let mut s = 0;
    for n in 0..d {
        push("second", n, n, &moments[s], 1.0 / df);
        push("fourth", n, n, &moments[s + 1], 2.0 / (df * (df + 1.0)));
        s += 2;
    }
    for n in 0..d {
        for m in (n + 1)..d {
            push("fourth", n, m, &moments[s], 1.0 / (df * (df + 1.0)));
            s += 1;
        }
    }
    rec.tables.push(table);
    rec.check("uniform_moments", CheckKind::Oracle, bad.is_empty(), format!("{slots} moments, {} outside {Z_LIMIT}σ {}", bad.len(), bad.join(", ")));
    Ok(rec)
}

fn default_two_level() -> Vec<f64> {
    vec![0.75, 0.25]
}

fn default_hist_bins() -> usize {
    20
}

/// Histogram of `|c_1|²` under `GAP(ρ)` on `C²` against the analytic density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityHistogramConfig {
    #[serde(default = "default_two_level")]
    pub eigenvalues: Vec<f64>,
    pub samples: u64,
    #[serde(default = "default_hist_bins")]
    pub bins: usize,
}

pub fn run_density_histogram(cfg: &DensityHistogramConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    if cfg.eigenvalues.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: cfg.eigenvalues.len() });
    }
    if cfg.bins < 2 {
        return Err(Error::InvalidParameter("bins must be >= 2".into()));
    }
    let shape = HilbertDim::flat(2)?;
    let rho = RhoSpec::diagonal(Spectrum::Eigenvalues { values: cfg.eigenvalues.clone() })
        .build(shape, &mut engine.setup_stream(purpose::SETUP))?;
    // |c_1|² is uniform on [0, 1] under the uniform measure on the sphere of C²,
    // so its GAP density is the GAP density at (√x, √(1−x)).
    let density = |x: f64| -> f64 {
        let v = CVector::from_vec(vec![Complex64::new(x.sqrt(), 0.0), Complex64::new((1.0 - x).max(0.0).sqrt(), 0.0)]);
        let psi = crate::linalg::PureState::new(v, shape).expect("unit vector");
        gap_density(&psi, &rho).expect("full rank")
    };
    let width = 1.0 / cfg.bins as f64;
    let mut probs = Vec::with_capacity(cfg.bins);
    for k in 0..cfg.bins {
        probs.push(integrate(density, k as f64 * width, (k + 1) as f64 * width, 1e-13, 1e-11)?.value);
    }
    let total: f64 = probs.iter().sum();
    let mut rec = ExperimentRecord::new("density_histogram", cfg, engine.seed());
    rec.metric("density_integral", total);
    rec.check("density_normalized", CheckKind::Oracle, (total - 1.0).abs() < 1e-8, format!("∫ density = {total:.12}"));

    let sampler = GapSampler::new(&rho);
    let chunks = engine.map_chunks(purpose::SAMPLES, cfg.samples, |rng, range| {
        let mut counts = vec![0u64; cfg.bins];
        for _ in range {
            let x = sampler.sample_gap(rng).amplitudes()[0].norm_sqr();
            counts[((x / width) as usize).min(cfg.bins - 1)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; cfg.bins];
    for c in &chunks {
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }
    rec.samples = cfg.samples;
    let n = cfg.samples as f64;
    let expected: Vec<f64> = probs.iter().map(|p| p * n).collect();
    let chi = chi_square(&counts, &expected, 0);
    rec.metric("chi_square", chi.statistic);
    rec.metric("chi_square_p", chi.p_value);
    rec.check("chi_square", CheckKind::Oracle, chi.p_value > 0.01, format!("χ² = {:.3} on {} dof, p = {:.4}", chi.statistic, chi.dof, chi.p_value));
    let mut table = Table::new("histogram", &["lo", "hi", "count", "expected"]);
    for k in 0..cfg.bins {
        table.push(vec![(k as f64 * width).into(), ((k + 1) as f64 * width).into(), counts[k].into(), expected[k].into()]);
    }
    rec.tables.push(table);
    Ok(rec)
}
