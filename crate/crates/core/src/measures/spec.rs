use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AtomBasis, DeltaMixture, GapSampler, VonMisesFisher};
use crate::linalg::{haar_unitary, DensityMatrix, HilbertDim};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Eigenvalue profile of a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Spectrum {
    /// `I / D`.
    Uniform {},
    /// `P_R / d_R` with `P_R` projecting onto the first `rank` basis vectors.
    Projection { rank: usize },
    /// `e^{-βE_n} / Z`. Without explicit `energies`, `D` equally spaced levels
    /// on `[-1, 1]` are used.
    Thermal {
        beta: f64,
        #[serde(default)]
        energies: Option<Vec<f64>>,
    },
    /// Explicit eigenvalues; rescaled to unit sum.
    Eigenvalues { values: Vec<f64> },
    /// `p` on the first basis vector and `(1 − p)/(D − 1)` on every other one.
    NearPure { p: f64 },
    /// `1/√D` on the first basis vector and the rest spread evenly.
    Spike {},
}

/// Eigenbasis of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoBasis {
    /// Diagonal in the computational (product) basis.
    #[default]
    Computational,
    /// Rotated by a Haar unitary drawn from the run seed.
    Haar,
    /// Rotated by `U_a ⊗ U_b` with independent Haar factors, which keeps
    /// the bipartite structure.
    ProductHaar,
}

/// Recipe for a density matrix on a given Hilbert space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoSpec {
    pub spectrum: Spectrum,
    #[serde(default)]
    pub basis: RhoBasis,
}

impl RhoSpec {
    pub fn diagonal(spectrum: Spectrum) -> Self {
        Self { spectrum, basis: RhoBasis::Computational }
    }

    pub fn uniform() -> Self {
        Self::diagonal(Spectrum::Uniform {})
    }

    /// Eigenvalues for dimension `d`, in basis order.
    pub fn eigenvalues(&self, d: usize) -> Result<Vec<f64>> {
        if d == 0 {
            return Err(Error::InvalidShape("dimension 0".into()));
        }
        let df = d as f64;
        let p = match &self.spectrum {
            Spectrum::Uniform {} => vec![1.0 / df; d],
            Spectrum::Projection { rank } => {
                if *rank == 0 || *rank > d {
                    return Err(Error::InvalidParameter(format!("projection rank {rank} not in 1..={d}")));
                }
                (0..d).map(|k| if k < *rank { 1.0 / *rank as f64 } else { 0.0 }).collect()
            }
            Spectrum::Thermal { beta, energies } => {
                if !beta.is_finite() {
                    return Err(Error::InvalidParameter(format!("beta {beta} is not finite")));
                }
                let e: Vec<f64> = match energies {
                    Some(e) if e.len() == d => e.clone(),
                    Some(e) => return Err(Error::DimensionMismatch { expected: d, got: e.len() }),
                    None if d == 1 => vec![0.0],
                    None => (0..d).map(|k| -1.0 + 2.0 * k as f64 / (df - 1.0)).collect(),
                };
                let e0 = e.iter().copied().fold(f64::INFINITY, f64::min);
                let w: Vec<f64> = e.iter().map(|x| (-beta * (x - e0)).exp()).collect();
                let z: f64 = w.iter().sum();
                w.iter().map(|x| x / z).collect()
            }
            Spectrum::Eigenvalues { values } => {
                if values.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: values.len() });
                }
                if values.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidParameter("eigenvalues must be finite and >= 0".into()));
                }
                let s: f64 = values.iter().sum();
                if !(s > 0.0) {
                    return Err(Error::InvalidParameter("eigenvalues sum to zero".into()));
                }
                values.iter().map(|x| x / s).collect()
            }
            Spectrum::NearPure { p } => {
                if !(*p > 0.0 && *p < 1.0) || d < 2 {
                    return Err(Error::InvalidParameter(format!("near-pure needs 0 < p < 1 and D >= 2, got p={p}, D={d}")));
                }
                let rest = (1.0 - p) / (df - 1.0);
                (0..d).map(|k| if k == 0 { *p } else { rest }).collect()
            }
            Spectrum::Spike {} => {
                if d < 2 {
                    return Err(Error::InvalidParameter("spike spectrum needs D >= 2".into()));
                }
                let top = 1.0 / df.sqrt();
                let rest = (1.0 - top) / (df - 1.0);
                (0..d).map(|k| if k == 0 { top } else { rest }).collect()
            }
        };
        Ok(p)
    }

    /// Builds `ρ`; a Haar basis is drawn from `rng`.
    pub fn build<R: Rng + ?Sized>(&self, shape: HilbertDim, rng: &mut R) -> Result<DensityMatrix> {
        let rho = DensityMatrix::from_spectrum(self.eigenvalues(shape.dim())?, shape)?;
        match self.basis {
            RhoBasis::Computational => Ok(rho),
            RhoBasis::Haar => rho.conjugate(&haar_unitary(shape.dim(), rng)),
            RhoBasis::ProductHaar => {
                let u_a = haar_unitary(shape.d_a, rng);
                let u_b = haar_unitary(shape.d_b, rng);
                rho.conjugate(&u_a.kronecker(&u_b))
            }
        }
    }
}

/// Which measure to sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// `G(ρ)`.
    Gaussian {},
    /// `GA(ρ)`.
    GaussianAdjusted {},
    /// `GAP(ρ)`.
    Gap {},
    /// Uniform on the sphere of `C^D` (`ρ` ignored).
    UniformSphere {},
    /// `Σ p_n δ_{|n⟩}` over the eigenvectors of `ρ`.
    DeltaMixture {
        #[serde(default)]
        atoms: AtomBasis,
    },
    /// VMF on the real sphere `S^{D-1}` with mean `e_1` (`ρ` ignored).
    VonMisesFisher { kappa: f64 },
}

impl MeasureSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureSpec::Gaussian {} => "gaussian",
            MeasureSpec::GaussianAdjusted {} => "gaussian_adjusted",
            MeasureSpec::Gap {} => "gap",
            MeasureSpec::UniformSphere {} => "uniform_sphere",
            MeasureSpec::DeltaMixture { .. } => "delta_mixture",
            MeasureSpec::VonMisesFisher { .. } => "von_mises_fisher",
        }
    }
}

/// One draw; `atom` is set for delta mixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub vector: CVector,
    pub atom: Option<usize>,
}

/// A measure ready for repeated sampling.
#[derive(Debug, Clone)]
pub enum Measure {
    Gaussian(GapSampler),
    GaussianAdjusted(GapSampler),
    Gap(GapSampler),
    UniformSphere(HilbertDim),
    DeltaMixture(DeltaMixture),
    VonMisesFisher(VonMisesFisher),
}

impl Measure {
    /// `rng` is only used to fix a Haar atom basis.
    pub fn build<R: Rng + ?Sized>(spec: &MeasureSpec, rho: &DensityMatrix, rng: &mut R) -> Result<Self> {
        Ok(match spec {
            MeasureSpec::Gaussian {} => Measure::Gaussian(GapSampler::new(rho)),
            MeasureSpec::GaussianAdjusted {} => Measure::GaussianAdjusted(GapSampler::new(rho)),
            MeasureSpec::Gap {} => Measure::Gap(GapSampler::new(rho)),
            MeasureSpec::UniformSphere {} => Measure::UniformSphere(rho.shape()),
            MeasureSpec::DeltaMixture { atoms } => Measure::DeltaMixture(DeltaMixture::new(rho, *atoms, rng)?),
            MeasureSpec::VonMisesFisher { kappa } => {
                Measure::VonMisesFisher(VonMisesFisher::along_first_axis(rho.dim(), *kappa)?)
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Gaussian(s) | Measure::GaussianAdjusted(s) | Measure::Gap(s) => s.dim(),
            Measure::UniformSphere(shape) => shape.dim(),
            Measure::DeltaMixture(m) => m.rho().dim(),
            Measure::VonMisesFisher(v) => v.dim(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        match self {
            Measure::Gaussian(s) => Draw { vector: s.sample_gaussian(rng), atom: None },
            Measure::GaussianAdjusted(s) => Draw { vector: s.sample_ga(rng), atom: None },
            Measure::Gap(s) => Draw { vector: s.sample_gap(rng).into_amplitudes(), atom: None },
            Measure::UniformSphere(shape) => {
                Draw { vector: super::sample_uniform_sphere(*shape, rng).into_amplitudes(), atom: None }
            }
            Measure::DeltaMixture(m) => {
                let n = m.sample_index(rng);
                Draw { vector: m.atom(n).into_amplitudes(), atom: Some(n) }
            }
            Measure::VonMisesFisher(v) => {
                let x = v.sample(rng);
                Draw { vector: CVector::from_iterator(x.len(), x.into_iter().map(|a| Complex64::new(a, 0.0))), atom: None }
            }
        }
    }

    /// Exact density matrix `E_μ |ψ⟩⟨ψ|`.
    pub fn density_matrix(&self) -> CMatrix {
        match self {
            Measure::Gaussian(s) | Measure::Gap(s) => s.rho().matrix().clone(),
            // E_G ‖ψ‖² ψψ† = ρ + ρ².
            Measure::GaussianAdjusted(s) => {
                let r = s.rho().matrix();
                r + r * r
            }
            Measure::UniformSphere(shape) => {
                CMatrix::identity(shape.dim(), shape.dim()) * Complex64::new(1.0 / shape.dim() as f64, 0.0)
            }
            Measure::DeltaMixture(m) => m.rho().matrix().clone(),
            Measure::VonMisesFisher(v) => {
                // Axially symmetric: E x x^T = a μμ^T + (1 − a)/(m − 1)(I − μμ^T)
                // with a = E t²; evaluated by quadrature of the marginal.
                let m = v.dim();
                let a = if m == 1 {
                    1.0
                } else {
                    let z = crate::quad::integrate(|t| v.cosine_weight(t), -1.0, 1.0, 0.0, 1e-10).map(|q| q.value);
                    let s = crate::quad::integrate(|t| t * t * v.cosine_weight(t), -1.0, 1.0, 0.0, 1e-10).map(|q| q.value);
                    match (z, s) {
                        (Ok(z), Ok(s)) => s / z,
                        _ => f64::NAN,
                    }
                };
                let rest = if m > 1 { (1.0 - a) / (m as f64 - 1.0) } else { 0.0 };
                let mu = v.mean_direction();
                CMatrix::from_fn(m, m, |i, j| {
                    let outer = mu[i] * mu[j];
                    let id = if i == j { 1.0 } else { 0.0 };
                    Complex64::new(a * outer + rest * (id - outer), 0.0)
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spectra_are_normalised() {
        for s in [
            Spectrum::Uniform {},
            Spectrum::Projection { rank: 3 },
            Spectrum::Thermal { beta: 2.0, energies: None },
            Spectrum::Eigenvalues { values: (1..=8).map(|k| k as f64).collect() },
            Spectrum::NearPure { p: 0.3 },
            Spectrum::Spike {},
        ] {
            let p = RhoSpec::diagonal(s.clone()).eigenvalues(8).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{s:?}");
        }
        assert!(RhoSpec::diagonal(Spectrum::Projection { rank: 9 }).eigenvalues(8).is_err());
        assert!(RhoSpec::diagonal(Spectrum::NearPure { p: 1.0 }).eigenvalues(8).is_err());
    }

    #[test]
    fn thermal_prefers_low_energy() {
        let p = RhoSpec::diagonal(Spectrum::Thermal { beta: 1.0, energies: None }).eigenvalues(5).unwrap();
        assert!(p.windows(2).all(|w| w[0] > w[1]));
        assert!((p[0] / p[4] - 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn haar_basis_keeps_spectrum() {
        let spec = RhoSpec { spectrum: Spectrum::Thermal { beta: 3.0, energies: None }, basis: RhoBasis::Haar };
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let rho = spec.build(HilbertDim::bipartite(2, 3).unwrap(), &mut rng).unwrap();
        let mut expected = spec.eigenvalues(6).unwrap();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in rho.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(rho.basis(), crate::Basis::Dense(_)));
    }

    #[test]
    fn product_haar_rotates_the_marginal_unitarily() {
        let shape = HilbertDim::bipartite(3, 4).unwrap();
        let spectrum = Spectrum::Thermal { beta: 2.0, energies: None };
        let plain = RhoSpec::diagonal(spectrum.clone()).build(shape, &mut ChaCha8Rng::seed_from_u64(62)).unwrap();
        let rotated = RhoSpec { spectrum, basis: RhoBasis::ProductHaar }
            .build(shape, &mut ChaCha8Rng::seed_from_u64(62))
            .unwrap();
        let eig = |m: &CMatrix| {
            let (mut v, _) = crate::linalg::hermitian_eigen(m);
            v.sort_by(f64::total_cmp);
            v
        };
        let (a, b) = (eig(&plain.reduced_a_matrix()), eig(&rotated.reduced_a_matrix()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
        assert!((plain.matrix() - rotated.matrix()).norm() > 1e-3);
    }

    #[test]
    fn specs_round_trip_through_json() {
        let spec = MeasureSpec::DeltaMixture { atoms: AtomBasis::Haar };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"kind":"delta_mixture","atoms":"haar"}"#);
        assert_eq!(serde_json::from_str::<MeasureSpec>(&s).unwrap(), spec);
        let bad = serde_json::from_str::<MeasureSpec>(r#"{"kind":"gap","extra":1}"#);
        assert!(bad.is_err());
        assert_eq!(serde_json::from_str::<MeasureSpec>(r#"{"kind":"gap"}"#).unwrap(), MeasureSpec::Gap {});
        assert!(serde_json::from_str::<Spectrum>(r#"{"kind":"uniform","rank":3}"#).is_err());
    }
}
