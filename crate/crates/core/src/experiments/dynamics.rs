use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::common::{check_samples, default_rho, shape, trace_distance, trapezoid_mean, Grid, ObservableSpec, SplitMatrix};
use super::engine::Engine;
use super::levy::QuadForm;
use super::record::{tail_rows, CheckKind, ExperimentRecord, Table};
use crate::linalg::{gue_hamiltonian, operator_norm, partial_trace_pure, Propagator};
use crate::measures::{GapSampler, RhoSpec};
use crate::moments::bounds::BoundSpec;
use crate::rng::purpose;
use crate::stats::{Moments, Summary};
use crate::{CMatrix, Complex64, Error, Result};

/// Hamiltonian ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    /// GUE with semicircle on `[-2, 2]`.
    Gue {},
    /// Diagonal in the eigenbasis of `ρ` with standard normal energies.
    Commuting {},
}

impl Default for HamiltonianSpec {
    fn default() -> Self {
        HamiltonianSpec::Gue {}
    }
}

fn default_n_t() -> usize {
    64
}

/// Instantaneous and time-averaged deviations of `ψ_t = e^{−iHt}ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicalConfig {
    pub d_a: usize,
    pub d_b: usize,
    #[serde(default = "default_rho")]
    pub rho: RhoSpec,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default)]
    pub hamiltonian: HamiltonianSpec,
    /// Time horizon `T`; defaults to 10 times the inverse mean level
    /// spacing of the central half of the spectrum of `H`.
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Trapezoid nodes on `[0, T]`; convergence is checked against `2 N_t − 1`.
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    pub samples: u64,
    #[serde(default)]
    pub eps: Grid,
    /// Time for the instantaneous tails; defaults to `T/2`.
    #[serde(default)]
    pub instant_time: Option<f64>,
}

const CONVERGENCE_TOL: f64 = 0.01;
const INVARIANCE_TOL: f64 = 1e-9;

/// `10 / Δ` with `Δ` the mean level spacing over the central half of the
/// spectrum (`energies` sorted descending).
fn default_horizon(energies: &[f64]) -> Result<f64> {
    let d = energies.len();
    let (lo, hi) = if d >= 8 { (d / 4, 3 * d / 4) } else { (0, d - 1) };
    if hi <= lo {
        return Err(Error::InvalidParameter("default t_max needs at least two energy levels".into()));
    }
    let spacing = (energies[lo] - energies[hi]).abs() / (hi - lo) as f64;
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter("degenerate spectrum; set t_max explicitly".into()));
    }
    Ok(10.0 / spacing)
}

/// Per-draw statistics.
#[derive(Debug, Clone, Copy)]
struct Draw {
    obs_instant: f64,
    red_instant: f64,
    obs_coarse: f64,
    obs_fine: f64,
    red_coarse: f64,
    red_fine: f64,
}

pub fn run_dynamical_typicality(cfg: &DynamicalConfig, engine: &Engine) -> Result<ExperimentRecord> {
    check_samples(cfg.samples)?;
    if let Some(t) = cfg.t_max {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {t}")));
        }
    }
    if cfg.n_t < 2 {
        return Err(Error::InvalidParameter(format!("n_t must be >= 2, got {}", cfg.n_t)));
    }
    let grid = cfg.eps.points()?;
    let shape = shape(cfg.d_a, cfg.d_b)?;
    let d = shape.dim();
    let rho = cfg.rho.build(shape, &mut engine.setup_stream(purpose::SETUP))?;
    let b = cfg.observable.build(d, &mut engine.setup_stream(purpose::OBSERVABLE))?;
    let u_rho = rho.eigenvector_matrix();
    let h = match cfg.hamiltonian {
        HamiltonianSpec::Gue {} => gue_hamiltonian(d, &mut engine.setup_stream(purpose::HAMILTONIAN)),
        HamiltonianSpec::Commuting {} => {
            let mut rng = engine.setup_stream(purpose::HAMILTONIAN);
            let e: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let mut scaled = u_rho.clone();
            for (k, ek) in e.iter().enumerate() {
                scaled.column_mut(k).iter_mut().for_each(|z| *z *= *ek);
            }
            let h = &scaled * u_rho.adjoint();
            (&h + h.adjoint()) * Complex64::new(0.5, 0.0)
        }
    };
    let prop = Propagator::new(&h)?;
    let v = prop.eigenvectors();
    let energies = prop.energies();
    let t_max = match cfg.t_max {
        Some(t) => t,
        None => default_horizon(energies)?,
    };

    // Fine grid of 2N_t − 1 nodes; the even nodes form the N_t-node grid.
    let n_fine = 2 * (cfg.n_t - 1) + 1;
    let times: Vec<f64> = (0..n_fine).map(|j| t_max * j as f64 / (n_fine - 1) as f64).collect();
    let t_star = cfg.instant_time.unwrap_or(t_max / 2.0);
    let j_star = (0..n_fine)
        .min_by(|&a, &b| (times[a] - t_star).abs().total_cmp(&(times[b] - t_star).abs()))
        .expect("n_fine >= 3");
    let phase = CMatrix::from_fn(d, n_fine, |k, j| Complex64::from_polar(1.0, -energies[k] * times[j]));

    // Reference curves tr(ρ_t B) and tr_b ρ_t.
    let rho_h = v.adjoint() * rho.matrix() * v;
    let b_h = v.adjoint() * &b * v;
    let obs_ref: Vec<f64> = (0..n_fine)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                for l in 0..d {
                    acc += phase[(k, j)] * rho_h[(k, l)] * phase[(l, j)].conj() * b_h[(l, k)];
                }
            }
            acc.re
        })
        .collect();
    let p = rho.eigenvalues();
    let invariant = p.iter().all(|x| (x - p[0]).abs() < 1e-15) || matches!(cfg.hamiltonian, HamiltonianSpec::Commuting {});
    let w = v.adjoint() * &u_rho;
    let red_ref: Vec<CMatrix> = if invariant {
        vec![rho.reduced_a_matrix(); n_fine]
    } else {
        let rank = p.iter().take_while(|x| **x > 0.0).count();
        let v_split = SplitMatrix::from_complex(v);
        (0..n_fine)
            .map(|j| {
                let m = SplitMatrix::from_complex(&CMatrix::from_fn(d, rank, |k, n| phase[(k, j)] * w[(k, n)]));
                let x = v_split.mul(&m);
                let mut acc = CMatrix::zeros(cfg.d_a, cfg.d_a);
                for n in 0..rank {
                    let r = partial_trace_pure(&x.column(n), shape).expect("shape matches");
                    acc += r * Complex64::new(p[n], 0.0);
                }
                acc
            })
            .collect()
    };

    let mut rec = ExperimentRecord::new("dynamical_typicality", cfg, engine.seed());
    let obs_drift = obs_ref.iter().map(|x| (x - obs_ref[0]).abs()).fold(0.0, f64::max);
    rec.metric("reference_observable_drift", obs_drift);
    rec.metric("instant_time", times[j_star]);
    rec.metric("t_max", t_max);
    if matches!(cfg.hamiltonian, HamiltonianSpec::Commuting {}) {
        rec.check(
            "commuting_invariance",
            CheckKind::Oracle,
            obs_drift < INVARIANCE_TOL,
            format!("max_t |tr(ρ_t B) − tr(ρB)| = {obs_drift:.3e}"),
        );
    }

    let v_split = SplitMatrix::from_complex(v);
    let b_form = QuadForm::new(&b);
    let b_split = match &b_form {
        QuadForm::Dense(m) => Some(SplitMatrix::from_complex(m)),
        QuadForm::Diagonal(_) => None,
    };
    let sampler = GapSampler::new(&rho);
    let draws: Vec<Draw> = engine.map_samples(purpose::SAMPLES, cfg.samples, |rng| {
        let c = &w * sampler.gap_eigen(rng);
        let mut coeffs = SplitMatrix::zeros(d, n_fine);
        for j in 0..n_fine {
            for k in 0..d {
                coeffs.set(k, j, phase[(k, j)] * c[k]);
            }
        }
        let psi = v_split.mul(&coeffs);
        let b_psi = b_split.as_ref().map(|bs| bs.mul(&psi));
        let mut obs = Vec::with_capacity(n_fine);
        let mut red = Vec::with_capacity(n_fine);
        for j in 0..n_fine {
            let col = psi.column(j);
            let value = match (&b_form, &b_psi) {
                (QuadForm::Diagonal(wts), _) => wts.iter().zip(&col).map(|(w, z)| w * z.norm_sqr()).sum::<f64>(),
                (QuadForm::Dense(_), Some(bp)) => col.iter().enumerate().map(|(k, z)| (z.conj() * bp.get(k, j)).re).sum(),
                _ => unreachable!(),
            };
            obs.push((value - obs_ref[j]).abs());
            let r = partial_trace_pure(&col, shape).expect("shape matches");
            red.push(trace_distance(&r, &red_ref[j]));
        }
        let even = |xs: &[f64]| xs.iter().step_by(2).copied().collect::<Vec<f64>>();
        Draw {
            obs_instant: obs[j_star],
            red_instant: red[j_star],
            obs_coarse: trapezoid_mean(&even(&obs)),
            obs_fine: trapezoid_mean(&obs),
            red_coarse: trapezoid_mean(&even(&red)),
            red_fine: trapezoid_mean(&red),
        }
    });
    rec.samples += cfg.samples;

    let (b_norm, rho_norm, d_a) = (operator_norm(&b), rho.norm(), cfg.d_a as f64);
    let col = |f: fn(&Draw) -> f64| draws.iter().map(f).collect::<Vec<f64>>();
    let series = [
        ("observable_instant", col(|x| x.obs_instant)),
        ("reduced_instant", col(|x| x.red_instant)),
        ("observable_time_avg", col(|x| x.obs_coarse)),
        ("reduced_time_avg", col(|x| x.red_coarse)),
    ];
    for (stat, devs) in &series {
        let bound = |eps: f64| -> Option<BoundSpec> {
            Some(match *stat {
                "observable_instant" => BoundSpec::LevyB { eps, b_norm, rho_norm },
                "reduced_instant" => BoundSpec::ExpEps { d_a, eps, rho_norm },
                "observable_time_avg" => BoundSpec::TimeAveragedObservable { eps, b_norm, rho_norm },
                _ => BoundSpec::TimeAveragedReduced { d_a, eps, rho_norm },
            })
        };
        rec.tails.extend(tail_rows("dynamics", stat, "eps", devs, &grid, bound, true)?);
        rec.summaries.insert((*stat).to_string(), Summary::of(devs));
    }

    let mut conv = Table::new("convergence", &["statistic", "nodes", "refined_nodes", "mean", "refined_mean", "relative_change"]);
    for (stat, coarse, fine) in [
        ("observable_time_avg", col(|x| x.obs_coarse), col(|x| x.obs_fine)),
        ("reduced_time_avg", col(|x| x.red_coarse), col(|x| x.red_fine)),
    ] {
        let (mc, mf) = (Moments::from_slice(&coarse).mean, Moments::from_slice(&fine).mean);
        let rel = if mf.abs() > 1e-12 { (mf - mc).abs() / mf.abs() } else { (mf - mc).abs() };
        conv.push(vec![stat.into(), cfg.n_t.into(), n_fine.into(), mc.into(), mf.into(), rel.into()]);
        rec.metric(format!("relative_change[{stat}]"), rel);
        rec.check(
            format!("trapezoid_convergence[{stat}]"),
            CheckKind::Oracle,
            rel < CONVERGENCE_TOL,
            format!("{} -> {} nodes: {mc:.6e} -> {mf:.6e}, change {:.3}%", cfg.n_t, n_fine, 100.0 * rel),
        );
    }
    rec.tables.push(conv);
    rec.add_soundness_check();
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Spectrum;

    fn cfg(rho: RhoSpec, hamiltonian: HamiltonianSpec) -> DynamicalConfig {
        DynamicalConfig {
            d_a: 2,
            d_b: 8,
            rho,
            observable: ObservableSpec::RandomHermitian {},
            hamiltonian,
            t_max: Some(2.0),
            n_t: 32,
            samples: 200,
            eps: Grid::default(),
            instant_time: None,
        }
    }

    #[test]
    fn commuting_hamiltonian_keeps_rho_invariant() {
        let rho = RhoSpec { spectrum: Spectrum::Thermal { beta: 2.0, energies: None }, basis: crate::measures::RhoBasis::Haar };
        let rec = run_dynamical_typicality(&cfg(rho, HamiltonianSpec::Commuting {}), &Engine::new(8, 1).unwrap()).unwrap();
        assert!(rec.passed(), "{:?}", rec.failed_checks());
        assert!(rec.metrics["reference_observable_drift"] < 1e-9);
    }

    #[test]
    fn gue_run_is_sound_and_converged() {
        let rho = RhoSpec::diagonal(Spectrum::Thermal { beta: 1.0, energies: None });
        let rec = run_dynamical_typicality(&cfg(rho, HamiltonianSpec::Gue {}), &Engine::new(9, 2).unwrap()).unwrap();
        assert!(rec.passed(), "{:?}", rec.failed_checks());
        assert_eq!(rec.tails.len(), 4 * 16);
        // A non-uniform ρ moves under a generic H.
        assert!(rec.metrics["reference_observable_drift"] > 1e-6);
    }

    #[test]
    fn default_horizon_uses_level_spacing() {
        let e: Vec<f64> = (0..16).rev().map(|k| 0.5 * k as f64).collect();
        assert!((default_horizon(&e).unwrap() - 20.0).abs() < 1e-12);
        assert!(default_horizon(&[1.0]).is_err());
        let mut c = cfg(RhoSpec::uniform(), HamiltonianSpec::Gue {});
        c.t_max = None;
        c.samples = 20;
        let rec = run_dynamical_typicality(&c, &Engine::new(23, 1).unwrap()).unwrap();
        assert!(rec.metrics["t_max"] > 10.0);
    }

    #[test]
    fn instantaneous_reference_matches_direct_evolution() {
        let mut c = cfg(RhoSpec::diagonal(Spectrum::Thermal { beta: 1.0, energies: None }), HamiltonianSpec::Gue {});
        c.samples = 1;
        c.t_max = Some(1.0);
        c.n_t = 2;
        let engine = Engine::new(10, 1).unwrap();
        let rec = run_dynamical_typicality(&c, &engine).unwrap();
        // Rebuild ρ_{T/2} directly and compare tr(ρ_t B).
        let s = shape(2, 8).unwrap();
        let rho = c.rho.build(s, &mut engine.setup_stream(purpose::SETUP)).unwrap();
        let h = gue_hamiltonian(16, &mut engine.setup_stream(purpose::HAMILTONIAN));
        let b = c.observable.build(16, &mut engine.setup_stream(purpose::OBSERVABLE)).unwrap();
        let rho_t = crate::linalg::evolve_density(&rho, &h, 0.5).unwrap();
        let direct = (rho_t.matrix() * &b).trace().re;
        let drift_expected = (direct - (rho.matrix() * &b).trace().re).abs();
        assert!(rec.metrics["reference_observable_drift"] >= drift_expected - 1e-10);
    }
}
