use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{DensityMatrix, PureState};
use crate::{CVector, Complex64};

/// Draws from `G(ρ)`, `GA(ρ)` and `GAP(ρ)` for a fixed `ρ`.
///
/// Coordinates are drawn in the eigenbasis of `ρ` and rotated once at the
/// end. The `*_eigen` methods skip the rotation for callers that work in the
/// eigenframe.
#[derive(Debug, Clone)]
pub struct GapSampler {
    rho: DensityMatrix,
    sqrt_half_p: Vec<f64>,
    cumulative: Vec<f64>,
}

#[inline]
fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let t: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    Complex64::new(t.cos(), t.sin())
}

/// Uniform on `(0, 1]`.
#[inline]
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

impl GapSampler {
    pub fn new(rho: &DensityMatrix) -> Self {
        let p = rho.eigenvalues();
        let sqrt_half_p = p.iter().map(|&x| (0.5 * x).sqrt()).collect();
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        Self { rho: rho.clone(), sqrt_half_p, cumulative }
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.sqrt_half_p.len()
    }

    /// Index `n` with probability `p_n`. Zero-weight indices are never drawn.
    pub fn pick_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("D >= 1");
        let target = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= target);
        k.min(self.dim() - 1)
    }

    /// `Z_n` independent, `E|Z_n|² = p_n`, eigen coordinates.
    pub fn gaussian_eigen<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        CVector::from_iterator(
            self.dim(),
            self.sqrt_half_p.iter().map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            }),
        )
    }

    /// Exact `GA(ρ)` draw in eigen coordinates.
    ///
    /// `‖ψ‖² G(ρ) = Σ_n p_n · (|Z_n|²/p_n) G(ρ)`: pick `n ~ p`, then give
    /// coordinate `n` the size-biased law `|Z_n|² ~ Gamma(2, p_n)` with a
    /// uniform phase and leave every other coordinate Gaussian.
    pub fn ga_eigen<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let n = self.pick_index(rng);
        let mut z = self.gaussian_eigen(rng);
        let p_n = 2.0 * self.sqrt_half_p[n] * self.sqrt_half_p[n];
        let r2 = -p_n * (open_uniform(rng) * open_uniform(rng)).ln();
        z[n] = unit_phase(rng) * r2.sqrt();
        z
    }

    /// `GAP(ρ)` draw in eigen coordinates, unit norm.
    pub fn gap_eigen<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let mut z = self.ga_eigen(rng);
        let norm = z.norm();
        z.unscale_mut(norm);
        z
    }

    pub fn sample_gaussian<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        self.rho.from_eigen_coords(&self.gaussian_eigen(rng))
    }

    pub fn sample_ga<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        self.rho.from_eigen_coords(&self.ga_eigen(rng))
    }

    pub fn sample_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> PureState {
        let v = self.rho.from_eigen_coords(&self.gap_eigen(rng));
        super::unit_state(v, self.rho.shape())
    }
}

/// One draw from `G(ρ)` (ambient, not normalised).
pub fn sample_gaussian<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> CVector {
    GapSampler::new(rho).sample_gaussian(rng)
}

/// One draw from `GA(ρ)` (ambient, not normalised).
pub fn sample_ga<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> CVector {
    GapSampler::new(rho).sample_ga(rng)
}

/// One draw from `GAP(ρ)`.
pub fn sample_gap<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> PureState {
    GapSampler::new(rho).sample_gap(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HilbertDim;
    use crate::stats::Moments;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spectrum(p: Vec<f64>) -> DensityMatrix {
        let d = p.len();
        DensityMatrix::from_spectrum(p, HilbertDim::flat(d).unwrap()).unwrap()
    }

    #[test]
    fn gaussian_norm_and_fourth_moment() {
        let rho = spectrum(vec![0.4, 0.3, 0.2, 0.1]);
        let s = GapSampler::new(&rho);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut norm2 = Moments::default();
        let mut z4: Vec<Moments> = vec![Moments::default(); 4];
        for _ in 0..100_000 {
            let z = s.gaussian_eigen(&mut rng);
            norm2.push(z.norm_squared());
            for (k, m) in z4.iter_mut().enumerate() {
                m.push(z[k].norm_sqr().powi(2));
            }
        }
        assert!((norm2.mean - 1.0).abs() < 4.0 * norm2.sem());
        for (k, m) in z4.iter().enumerate() {
            let p = rho.eigenvalues()[k];
            assert!((m.mean - 2.0 * p * p).abs() < 4.0 * m.sem(), "k={k}");
        }
    }

    #[test]
    fn pure_rho_is_supported_on_first_vector() {
        let rho = spectrum(vec![0.0, 1.0, 0.0]);
        let s = GapSampler::new(&rho);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut radial = Moments::default();
        for _ in 0..20_000 {
            let g = s.sample_gaussian(&mut rng);
            assert_eq!(g[0], Complex64::new(0.0, 0.0));
            assert_eq!(g[2], Complex64::new(0.0, 0.0));
            assert_eq!(s.pick_index(&mut rng), 0);
            let ga = s.sample_ga(&mut rng);
            radial.push(ga[1].norm_sqr());
        }
        // Gamma(2, 1) has mean 2.
        assert!((radial.mean - 2.0).abs() < 4.0 * radial.sem());
    }

    #[test]
    fn ga_norm_matches_gaussian_fourth_moment() {
        let rho = spectrum(vec![0.5, 0.25, 0.125, 0.125]);
        let s = GapSampler::new(&rho);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut m = Moments::default();
        for _ in 0..100_000 {
            m.push(s.ga_eigen(&mut rng).norm_squared());
        }
        let expected = 1.0 + rho.purity();
        assert!((m.mean - expected).abs() < 4.0 * m.sem());
    }

    #[test]
    fn gap_samples_are_unit() {
        let rho = spectrum(vec![0.7, 0.2, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let psi = sample_gap(&rho, &mut rng);
            assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-14);
        }
    }
}
