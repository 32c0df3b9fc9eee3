use crate::linalg::{DensityMatrix, PureState};
use crate::{Error, Result};

/// `ln` of the GAP(ρ) density relative to the uniform measure,
/// `ln D − Σ ln p_n − (D+1) ln⟨ψ|ρ⁻¹|ψ⟩`.
pub fn log_gap_density(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: psi.dim() });
    }
    let q = rho.inverse_quadratic_form(psi.amplitudes())?;
    let d = rho.dim() as f64;
    let log_det: f64 = rho.eigenvalues().iter().map(|p| p.ln()).sum();
    Ok(d.ln() - log_det - (d + 1.0) * q.ln())
}

/// GAP(ρ) density relative to the uniform measure on the sphere.
/// Fails with [`Error::SingularDensity`] unless every `p_n > 0`.
pub fn gap_density(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    log_gap_density(psi, rho).map(f64::exp)
}

/// Rank-`n` approximation that keeps `p_1..p_{n-1}` and puts the remaining
/// weight `Σ_{m≥n} p_m` on eigenvector `n`. The trace stays exactly 1.
pub fn truncate_density(rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    let d = rho.dim();
    if n == 0 || n > d {
        return Err(Error::InvalidParameter(format!("truncation rank {n} not in 1..={d}")));
    }
    let p = rho.eigenvalues();
    let mut q = vec![0.0; d];
    q[..n - 1].copy_from_slice(&p[..n - 1]);
    q[n - 1] = p[n - 1..].iter().sum();
    rho.with_spectrum(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, trace_norm_hermitian, HilbertDim};
    use crate::measures::sample_uniform_sphere;
    use crate::stats::Moments;
    use crate::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_rho_has_unit_density() {
        let shape = HilbertDim::flat(5).unwrap();
        let rho = DensityMatrix::maximally_mixed(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let psi = sample_uniform_sphere(shape, &mut rng);
            assert!((gap_density(&psi, &rho).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_plug_in_value() {
        let shape = HilbertDim::flat(2).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.75, 0.25], shape).unwrap();
        let psi = PureState::basis(shape, 0).unwrap();
        assert!((gap_density(&psi, &rho).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn global_phase_invariance() {
        let shape = HilbertDim::flat(3).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.5, 0.3, 0.2], shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let psi = sample_uniform_sphere(shape, &mut rng);
        let rotated = PureState::new(psi.amplitudes() * Complex64::from_polar(1.0, 1.234), shape).unwrap();
        let (a, b) = (gap_density(&psi, &rho).unwrap(), gap_density(&rotated, &rho).unwrap());
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn density_integrates_to_one() {
        let shape = HilbertDim::flat(2).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.75, 0.25], shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut m = Moments::default();
        for _ in 0..1_000_000 {
            m.push(gap_density(&sample_uniform_sphere(shape, &mut rng), &rho).unwrap());
        }
        assert!((m.mean - 1.0).abs() < 0.01);
    }

    #[test]
    fn singular_rho_rejected() {
        let shape = HilbertDim::flat(2).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![1.0, 0.0], shape).unwrap();
        let psi = PureState::basis(shape, 0).unwrap();
        assert!(matches!(gap_density(&psi, &rho), Err(Error::SingularDensity(_))));
    }

    #[test]
    fn truncation_examples() {
        let shape = HilbertDim::flat(3).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.5, 0.3, 0.2], shape).unwrap();
        let r2 = truncate_density(&rho, 2).unwrap();
        assert_eq!(r2.eigenvalues(), &[0.5, 0.5, 0.0]);
        assert_eq!(truncate_density(&rho, 3).unwrap().eigenvalues(), rho.eigenvalues());
        assert!(truncate_density(&rho, 0).is_err());
    }

    #[test]
    fn truncation_error_decreases_to_zero() {
        let d = 12;
        let shape = HilbertDim::flat(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let raw: Vec<f64> = (0..d).map(|k| 0.8f64.powi(k as i32)).collect();
        let total: f64 = raw.iter().sum();
        let rho = DensityMatrix::from_spectrum(raw.iter().map(|x| x / total).collect(), shape)
            .unwrap()
            .conjugate(&haar_unitary(d, &mut rng))
            .unwrap();
        let errs: Vec<f64> = (1..=d)
            .map(|n| trace_norm_hermitian(&(truncate_density(&rho, n).unwrap().matrix() - rho.matrix())))
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(errs[d - 1] < 1e-12);
    }
}
