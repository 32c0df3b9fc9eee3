use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GapSampler;
use crate::linalg::{haar_unitary, DensityMatrix, PureState};
use crate::Result;

/// Where the atoms of a delta mixture sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomBasis {
    /// Eigenvectors of `ρ`.
    #[default]
    Eigen,
    /// Eigenvectors of `WρW†` for one Haar unitary `W` fixed per mixture.
    Haar,
}

/// `μ = Σ_n p_n δ_{|n⟩}`.
#[derive(Debug, Clone)]
pub struct DeltaMixture {
    picker: GapSampler,
}

impl DeltaMixture {
    /// With [`AtomBasis::Haar`] the density matrix of the mixture is `WρW†`,
    /// which equals `ρ` only when `ρ ∝ I`.
    pub fn new<R: Rng + ?Sized>(rho: &DensityMatrix, basis: AtomBasis, rng: &mut R) -> Result<Self> {
        let rho = match basis {
            AtomBasis::Eigen => rho.clone(),
            AtomBasis::Haar => rho.conjugate(&haar_unitary(rho.dim(), rng))?,
        };
        Ok(Self { picker: GapSampler::new(&rho) })
    }

    /// Density matrix of the mixture.
    pub fn rho(&self) -> &DensityMatrix {
        self.picker.rho()
    }

    /// Atom index `n` with probability `p_n`.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.picker.pick_index(rng)
    }

    pub fn atom(&self, n: usize) -> PureState {
        PureState::from_unit_unchecked(self.rho().eigenvector(n), self.rho().shape())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PureState {
        self.atom(self.sample_index(rng))
    }
}

/// One draw from the delta mixture on the eigenvectors of `ρ`.
pub fn sample_delta_mixture<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> PureState {
    DeltaMixture::new(rho, AtomBasis::Eigen, rng).expect("eigen atoms need no rotation").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{trace_norm_hermitian, HilbertDim};
    use crate::CMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_atoms_have_pure_marginals() {
        let shape = HilbertDim::bipartite(2, 3).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.3, 0.2, 0.15, 0.15, 0.1, 0.1], shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mix = DeltaMixture::new(&rho, AtomBasis::Eigen, &mut rng).unwrap();
        for _ in 0..50 {
            let ra = mix.sample(&mut rng).reduced_a();
            let tr2 = (&ra * &ra).trace().re;
            assert!((tr2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_density_matrix_converges() {
        let shape = HilbertDim::flat(4).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.4, 0.3, 0.2, 0.1], shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mix = DeltaMixture::new(&rho, AtomBasis::Haar, &mut rng).unwrap();
        let n = 100_000;
        let mut acc = CMatrix::zeros(4, 4);
        for _ in 0..n {
            let a = mix.sample(&mut rng);
            acc += a.amplitudes() * a.amplitudes().adjoint();
        }
        acc /= crate::Complex64::new(n as f64, 0.0);
        assert!(trace_norm_hermitian(&(acc - mix.rho().matrix())) < 0.01);
    }

    #[test]
    fn single_atom_is_deterministic() {
        let shape = HilbertDim::flat(3).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.0, 0.0, 1.0], shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..100 {
            let s = sample_delta_mixture(&rho, &mut rng);
            assert_eq!(s.amplitudes()[2].re, 1.0);
        }
    }
}
