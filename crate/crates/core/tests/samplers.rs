//! Cross-sampler identities checked by Monte Carlo.

use gap_core::linalg::{gaussian_matrix, haar_unitary, partial_trace_b, partial_trace_pure, trace_norm_hermitian};
use gap_core::measures::{AtomBasis, GapSampler, Measure, MeasureSpec, RhoBasis, RhoSpec, Spectrum};
use gap_core::rng::stream;
use gap_core::stats::Moments;
use gap_core::{CMatrix, CVector, Complex64, DensityMatrix, HilbertDim};

fn thermal(shape: HilbertDim, seed: u64) -> DensityMatrix {
    RhoSpec { spectrum: Spectrum::Thermal { beta: 2.0, energies: None }, basis: RhoBasis::Haar }
        .build(shape, &mut stream(seed, 0, 0))
        .unwrap()
}

fn random_hermitian(d: usize, seed: u64) -> CMatrix {
    let g = gaussian_matrix(d, d, &mut stream(seed, 1, 0));
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

fn quad(v: &CVector, a: &CMatrix) -> f64 {
    (v.adjoint() * a * v)[(0, 0)].re
}

/// The mean of `ρ_a^ψ` is `tr_b` of the measure's density matrix, for every sampler.
#[test]
fn mean_reduced_state_is_partial_trace_of_density_matrix() {
    let shape = HilbertDim::bipartite(2, 32).unwrap();
    let rho = thermal(shape, 1);
    let n = 100_000;
    let specs = [
        MeasureSpec::Gaussian {},
        MeasureSpec::GaussianAdjusted {},
        MeasureSpec::Gap {},
        MeasureSpec::UniformSphere {},
        MeasureSpec::DeltaMixture { atoms: AtomBasis::Eigen },
        MeasureSpec::DeltaMixture { atoms: AtomBasis::Haar },
        MeasureSpec::VonMisesFisher { kappa: 8.0 },
    ];
    for (i, spec) in specs.iter().enumerate() {
        let mut rng = stream(10 + i as u64, 0, 0);
        let measure = Measure::build(spec, &rho, &mut rng).unwrap();
        let mut acc = CMatrix::zeros(2, 2);
        for _ in 0..n {
            acc += partial_trace_pure(measure.draw(&mut rng).vector.as_slice(), shape).unwrap();
        }
        acc /= Complex64::new(n as f64, 0.0);
        let target = partial_trace_b(&measure.density_matrix(), shape).unwrap();
        let dist = trace_norm_hermitian(&(&acc - &target));
        assert!(dist < 0.02, "{}: trace distance {dist}", spec.name());
    }

    // Plain G samples reweighted by ‖x‖² and normalised: the GAP average.
    let sampler = GapSampler::new(&rho);
    let mut rng = stream(20, 0, 0);
    let (mut acc, mut total) = (CMatrix::zeros(2, 2), 0.0);
    for _ in 0..n {
        let x = sampler.sample_gaussian(&mut rng);
        let w = x.norm_squared();
        let unit = &x / Complex64::new(w.sqrt(), 0.0);
        acc += partial_trace_pure(unit.as_slice(), shape).unwrap() * Complex64::new(w, 0.0);
        total += w;
    }
    acc /= Complex64::new(total, 0.0);
    let dist = trace_norm_hermitian(&(&acc - rho.reduced_a_matrix()));
    assert!(dist < 0.02, "reweighted G: trace distance {dist}");
}

type Functional = Box<dyn Fn(&CVector) -> f64>;

/// `E_GA g = E_G[‖x‖² g] / E_G‖x‖²` for bounded `g`.
#[test]
fn ga_sampler_matches_importance_weighted_gaussian() {
    let d = 8;
    let rho = thermal(HilbertDim::flat(d).unwrap(), 2);
    let sampler = GapSampler::new(&rho);
    let a = random_hermitian(d, 3);
    let a_norm = gap_core::linalg::operator_norm(&a);
    let functionals: Vec<Functional> = vec![
        Box::new(|x| x[0].norm_sqr() / x.norm_squared()),
        Box::new(|x| x[3].norm_sqr() / x.norm_squared()),
        Box::new(|x| x[7].norm_sqr() / x.norm_squared()),
        Box::new(|x| (-0.5 * x.norm_squared()).exp()),
        Box::new(|x| (-2.0 * x.norm_squared()).exp()),
        Box::new(|x| 1.0 / (1.0 + x.norm_squared())),
        Box::new(|x| x.norm_squared().min(1.5)),
        Box::new(|x| (x[0] + x[1]).norm_sqr() / (1.0 + x.norm_squared())),
        Box::new(|x| (x[2] * x[5].conj()).re / (1.0 + x.norm_squared())),
        Box::new(move |x| quad(x, &a) / (a_norm * x.norm_squared())),
    ];
    let n = 100_000;
    let mut rng = stream(4, 0, 0);
    let ga: Vec<CVector> = (0..n).map(|_| sampler.sample_ga(&mut rng)).collect();
    let g: Vec<CVector> = (0..n).map(|_| sampler.sample_gaussian(&mut rng)).collect();
    let w: Vec<f64> = g.iter().map(|x| x.norm_squared()).collect();
    let wsum: f64 = w.iter().sum();
    for (k, f) in functionals.iter().enumerate() {
        let direct = Moments::from_slice(&ga.iter().map(f).collect::<Vec<_>>());
        let vals: Vec<f64> = g.iter().map(f).collect();
        let weighted = vals.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / wsum;
        // Delta-method variance of the self-normalised estimator.
        let var_w = vals.iter().zip(&w).map(|(v, w)| (w * (v - weighted)).powi(2)).sum::<f64>() / (wsum * wsum);
        let z = (direct.mean - weighted) / (direct.sem().powi(2) + var_w).sqrt();
        assert!(z.abs() < 4.0, "g_{k}: GA {} vs weighted {weighted} (z = {z:.2})", direct.mean);
    }
}

/// `ψ ~ GAP(ρ)` implies `Uψ ~ GAP(UρU†)`; compared through the first two
/// moments of five random observables.
#[test]
fn gap_is_unitarily_equivariant() {
    let d = 6;
    let shape = HilbertDim::flat(d).unwrap();
    let rho = DensityMatrix::from_spectrum(vec![0.35, 0.25, 0.15, 0.12, 0.08, 0.05], shape).unwrap();
    let u = haar_unitary(d, &mut stream(5, 0, 0));
    let rotated = rho.conjugate(&u).unwrap();
    let (s0, s1) = (GapSampler::new(&rho), GapSampler::new(&rotated));
    let n = 100_000;
    let mut r0 = stream(6, 0, 0);
    let mut r1 = stream(7, 0, 0);
    let left: Vec<CVector> = (0..n).map(|_| &u * s0.sample_gap(&mut r0).into_amplitudes()).collect();
    let right: Vec<CVector> = (0..n).map(|_| s1.sample_gap(&mut r1).into_amplitudes()).collect();
    for k in 0..5 {
        let a = random_hermitian(d, 100 + k);
        for power in [1, 2] {
            let f = |v: &CVector| quad(v, &a).powi(power);
            let m0 = Moments::from_slice(&left.iter().map(f).collect::<Vec<_>>());
            let m1 = Moments::from_slice(&right.iter().map(f).collect::<Vec<_>>());
            let z = (m0.mean - m1.mean) / (m0.sem().powi(2) + m1.sem().powi(2)).sqrt();
            assert!(z.abs() < 4.0, "observable {k}, power {power}: {} vs {} (z = {z:.2})", m0.mean, m1.mean);
        }
    }
}
