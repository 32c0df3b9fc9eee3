//! Fourth moments, the variance bound for `⟨ψ|A|ψ⟩`, and tail bounds.

pub mod bounds;
mod kml;

pub use bounds::{bound_value, crossover_solve, BoundKind, BoundParams, BoundSpec, BoundValue, Crossover};
pub use kml::{gap_fourth_moment, kml, KmlKernel};

use crate::linalg::{DensityMatrix, Observable};
use crate::{CMatrix, Error, Result};

/// Right-hand side of the variance bound
/// `Var⟨ψ|A|ψ⟩ ≤ ‖A‖² trρ²/(1−p_max) · (1 + (4√trρ² + 2trρ²)/((1−2p_max)(1−3p_max)))`,
/// valid for `p_max < 1/4`.
pub fn variance_bound_from(a_norm: f64, purity: f64, p_max: f64) -> Result<f64> {
    if !(p_max < 0.25) {
        return Err(Error::HypothesisViolated(format!("variance bound needs ‖ρ‖ < 1/4, got {p_max}")));
    }
    let inner = (4.0 * purity.sqrt() + 2.0 * purity) / ((1.0 - 2.0 * p_max) * (1.0 - 3.0 * p_max));
    Ok(a_norm * a_norm * purity / (1.0 - p_max) * (1.0 + inner))
}

pub fn variance_bound(rho: &DensityMatrix, a: &Observable) -> Result<f64> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: a.dim() });
    }
    variance_bound_from(a.norm(), rho.purity(), rho.norm())
}

/// Exact `Var⟨ψ|A|ψ⟩ = E|⟨ψ|A|ψ⟩|² − |E⟨ψ|A|ψ⟩|²` for `ψ` uniform on the
/// sphere of `C^D`: `tr(A†A)/(D(D+1)) + |trA|²/(D(D+1)) − |trA|²/D²`.
///
/// For non-normal `A` the general formula includes `tr(A†A)`, which is what
/// the uniform fourth moments `(1+δ)/(D(D+1))` produce.
pub fn uniform_variance(a: &CMatrix) -> f64 {
    let d = a.nrows() as f64;
    let hs2 = a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let tr2 = a.trace().norm_sqr();
    hs2 / (d * (d + 1.0)) + tr2 / (d * (d + 1.0)) - tr2 / (d * d)
}

/// Exact `Var⟨ψ|A|ψ⟩` under `GAP(ρ)` from the fourth moments:
/// `Σ_m |A'_{mm}|² E|c_m|⁴ + Σ_{m≠l} (A'_{mm} conj(A'_{ll}) + |A'_{ml}|²) E|c_m|²|c_l|² − |tr ρA|²`,
/// with `A' = U†AU` in the eigenbasis. Requires full-rank `ρ`; `O(D²)` kernels.
pub fn gap_variance(rho: &DensityMatrix, a: &CMatrix, kernel: &KmlKernel) -> Result<f64> {
    let ap = rho.to_eigen_frame(a);
    let d = rho.dim();
    let mut second = 0.0;
    let mut mean = crate::Complex64::new(0.0, 0.0);
    for m in 0..d {
        mean += ap[(m, m)] * rho.eigenvalues()[m];
        for l in 0..d {
            let e = kernel.fourth_moment(m, l)?;
            second += if m == l {
                ap[(m, m)].norm_sqr() * e
            } else {
                ((ap[(m, m)] * ap[(l, l)].conj()).re + ap[(m, l)].norm_sqr()) * e
            };
        }
    }
    Ok(second - mean.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, haar_unitary, HilbertDim};
    use crate::measures::GapSampler;
    use crate::stats::Moments;
    use crate::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plug_in_example() {
        let v = variance_bound_from(1.0, 0.01, 0.01).unwrap();
        let expected = (0.01 / 0.99) * (1.0 + 0.42 / (0.98 * 0.97));
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.0145639).abs() < 1e-7);
    }

    #[test]
    fn hypothesis_is_enforced() {
        assert!(matches!(variance_bound_from(1.0, 0.3, 0.25), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn uniform_variance_reference() {
        // A = diag(1, -1): Var = 2/(2·3) = 1/3 for D=2.
        let a = CMatrix::from_diagonal(&crate::CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]));
        assert!((uniform_variance(&a) - 1.0 / 3.0).abs() < 1e-15);
        assert!(uniform_variance(&CMatrix::identity(5, 5)).abs() < 1e-15);
    }

    #[test]
    fn bound_dominates_uniform_variance_for_projections() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for d_r in [8usize, 16, 40, 100] {
            let a = gaussian_matrix(d_r, d_r, &mut rng);
            let obs = Observable::new(a.clone()).unwrap();
            let bound = variance_bound_from(obs.norm(), 1.0 / d_r as f64, 1.0 / d_r as f64).unwrap();
            assert!(uniform_variance(&a) <= bound);
        }
    }

    #[test]
    fn gap_variance_matches_uniform_and_monte_carlo() {
        let d = 6;
        let shape = HilbertDim::flat(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let a = gaussian_matrix(d, d, &mut rng);
        let uni = DensityMatrix::maximally_mixed(shape);
        let k = KmlKernel::from_density(&uni).unwrap();
        assert!((gap_variance(&uni, &a, &k).unwrap() - uniform_variance(&a)).abs() < 1e-10);

        let rho = DensityMatrix::from_spectrum(vec![0.3, 0.2, 0.15, 0.15, 0.12, 0.08], shape)
            .unwrap()
            .conjugate(&haar_unitary(d, &mut rng))
            .unwrap();
        let k = KmlKernel::from_density(&rho).unwrap();
        let exact = gap_variance(&rho, &a, &k).unwrap();
        let s = GapSampler::new(&rho);
        let mut mean = Complex64::new(0.0, 0.0);
        let xs: Vec<Complex64> = (0..200_000).map(|_| s.sample_gap(&mut rng).expectation(&a).unwrap()).collect();
        xs.iter().for_each(|x| mean += x);
        mean /= xs.len() as f64;
        let dev = Moments::from_slice(&xs.iter().map(|x| (x - mean).norm_sqr()).collect::<Vec<_>>());
        assert!((dev.mean - exact).abs() < 4.0 * dev.sem(), "{} vs {exact}", dev.mean);
    }
}
