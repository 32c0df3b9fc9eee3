use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{gaussian_matrix, operator_norm, trace_norm_hermitian, HilbertDim};
use crate::measures::{RhoSpec, Spectrum};
use crate::{CMatrix, Complex64, Error, Result};

/// Geometric grid `min · (max/min)^{k/(points−1)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Grid of deviations or radii: an explicit list or a geometric range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Geometric(GeometricGrid),
}

impl Default for Grid {
    /// 16 points from 0.01 to 2, the largest possible trace distance.
    fn default() -> Self {
        Grid::Geometric(GeometricGrid { min: 0.01, max: 2.0, points: 16 })
    }
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Geometric(GeometricGrid { min, max, points }) => {
                if !(*min > 0.0 && max >= min) || *points == 0 {
                    return Err(Error::InvalidParameter(format!("bad geometric grid {min}..{max} x{points}")));
                }
                if *points == 1 {
                    vec![*min]
                } else {
                    let r = (max / min).ln() / (*points as f64 - 1.0);
                    (0..*points).map(|k| min * (r * k as f64).exp()).collect()
                }
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParameter("grid must be non-empty, finite and >= 0".into()));
        }
        Ok(v)
    }
}

/// Test observable `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `diag(+1, −1, +1, …)`, `‖B‖ = 1`.
    SignDiagonal {},
    /// Hermitian GUE-like matrix rescaled to `‖B‖ = 1`.
    RandomHermitian {},
    /// Projector onto the first `rank` computational basis vectors.
    Projector { rank: usize },
}

impl Default for ObservableSpec {
    fn default() -> Self {
        ObservableSpec::SignDiagonal {}
    }
}

impl ObservableSpec {
    pub fn build<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Result<CMatrix> {
        Ok(match self {
            ObservableSpec::SignDiagonal {} => {
                CMatrix::from_fn(d, d, |i, j| if i != j { Complex64::new(0.0, 0.0) } else if i % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(-1.0, 0.0) })
            }
            ObservableSpec::RandomHermitian {} => {
                let g = gaussian_matrix(d, d, rng);
                let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
                let n = operator_norm(&h);
                h / Complex64::new(n, 0.0)
            }
            ObservableSpec::Projector { rank } => {
                if *rank > d {
                    return Err(Error::InvalidParameter(format!("projector rank {rank} exceeds D={d}")));
                }
                CMatrix::from_fn(d, d, |i, j| if i == j && i < *rank { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
            }
        })
    }
}

pub(crate) fn default_rho() -> RhoSpec {
    RhoSpec::diagonal(Spectrum::Uniform {})
}

pub(crate) fn shape(d_a: usize, d_b: usize) -> Result<HilbertDim> {
    HilbertDim::bipartite(d_a, d_b)
}

pub(crate) fn check_samples(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("samples must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Hermitian part, to wash out round-off before spectral routines.
pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `‖a − b‖_tr` for Hermitian `a`, `b`.
pub(crate) fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    trace_norm_hermitian(&hermitian_part(&(a - b)))
}

/// Complex matrix stored as separate real and imaginary parts so products
/// run on the real GEMM kernel.
#[derive(Debug, Clone)]
pub(crate) struct SplitMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMatrix {
    pub fn from_complex(m: &CMatrix) -> Self {
        Self { re: m.map(|z| z.re), im: m.map(|z| z.im) }
    }

    pub fn zeros(r: usize, c: usize) -> Self {
        Self { re: DMatrix::zeros(r, c), im: DMatrix::zeros(r, c) }
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    /// `self · other`.
    pub fn mul(&self, other: &SplitMatrix) -> SplitMatrix {
        let mut re = &self.re * &other.re;
        re -= &self.im * &other.im;
        let mut im = &self.re * &other.im;
        im += &self.im * &other.re;
        SplitMatrix { re, im }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.re[(i, j)] = z.re;
        self.im[(i, j)] = z.im;
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.nrows()).map(|i| self.get(i, j)).collect()
    }
}

/// Trapezoid mean `(1/T)∫₀ᵀ` of values on a uniform grid of `[0, T]`.
pub(crate) fn trapezoid_mean(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    (0.5 * (values[0] + values[n - 1]) + inner) / (n - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn geometric_grid_endpoints() {
        let g = Grid::default().points().unwrap();
        assert_eq!(g.len(), 16);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[15] - 2.0).abs() < 1e-12);
        assert!(Grid::Values(vec![]).points().is_err());
    }

    #[test]
    fn grid_parses_both_forms() {
        let a: Grid = serde_json::from_str("[0.1, 0.2]").unwrap();
        assert_eq!(a, Grid::Values(vec![0.1, 0.2]));
        let b: Grid = serde_json::from_str(r#"{"min":0.1,"max":1.0,"points":3}"#).unwrap();
        assert_eq!(b.points().unwrap().len(), 3);
    }

    #[test]
    fn split_product_matches_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let a = gaussian_matrix(7, 5, &mut rng);
        let b = gaussian_matrix(5, 3, &mut rng);
        let p = SplitMatrix::from_complex(&a).mul(&SplitMatrix::from_complex(&b));
        let q = &a * &b;
        for i in 0..7 {
            for j in 0..3 {
                assert!((p.get(i, j) - q[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let v: Vec<f64> = (0..11).map(|k| 3.0 + 2.0 * k as f64 / 10.0).collect();
        assert!((trapezoid_mean(&v) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn observables_have_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        for spec in [ObservableSpec::SignDiagonal {}, ObservableSpec::RandomHermitian {}, ObservableSpec::Projector { rank: 3 }] {
            let b = spec.build(8, &mut rng).unwrap();
            assert!((operator_norm(&b) - 1.0).abs() < 1e-12);
        }
    }
}
