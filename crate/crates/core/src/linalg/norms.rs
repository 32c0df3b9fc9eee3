use super::{hermiticity_defect, DensityMatrix};
use crate::{CMatrix, Error, Result};

/// Singular values of a square or rectangular complex matrix.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.singular_values().iter().copied().collect()
}

/// `‖M‖_tr = tr √(M†M)`, the sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// Trace norm of a Hermitian matrix as `Σ|λ_i|`.
///
/// Cheaper than [`trace_norm`]; callers guarantee Hermiticity. Used on the
/// small `d_a × d_a` deviations inside Monte Carlo loops.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)].re.abs(),
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(0, 1)];
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            (mean + rad).abs() + (mean - rad).abs()
        }
        _ => m.clone().symmetric_eigenvalues().iter().map(|x| x.abs()).sum(),
    }
}

/// `‖M‖ = σ_max(M)`.
pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// `‖M‖_2 = √tr(M†M)`.
pub fn hs_norm(m: &CMatrix) -> f64 {
    m.norm()
}

/// `tr ρ² = Σ p_n²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues().iter().map(|p| p * p).sum()
}

/// `−Σ p_n ln p_n` with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(rho.eigenvalues())
}

pub(crate) fn entropy_of_spectrum(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// A bounded operator together with its operator norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    norm: f64,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidShape(format!(
                "observable must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let norm = operator_norm(&matrix);
        Ok(Self { matrix, norm })
    }

    /// Diagonal observable with real entries; the norm is `max |b_i|`.
    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &b) in entries.iter().enumerate() {
            m[(i, i)] = b.into();
        }
        let norm = entries.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
        Self { matrix: m, norm }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_defect(&self.matrix) <= tol
    }

    /// Diagonal entries if the matrix is exactly diagonal.
    pub fn as_diagonal(&self) -> Option<Vec<crate::Complex64>> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.matrix[(i, j)].norm() != 0.0 {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.matrix[(i, i)]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, haar_unitary, HilbertDim};
    use crate::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Singular values via one-sided Jacobi on the columns, coded
    /// independently of nalgebra's bidiagonal SVD.
    fn jacobi_singular_values(m: &CMatrix) -> Vec<f64> {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut a: Vec<Vec<Complex64>> =
            (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..cols {
                for q in (p + 1)..cols {
                    let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                    let gamma: Complex64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                    let g = gamma.norm();
                    if g <= 1e-300 {
                        continue;
                    }
                    off = off.max(g / (alpha * beta).sqrt());
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..rows {
                        let x = a[p][i];
                        let y = a[q][i] * phase.conj();
                        a[p][i] = x * c - y * s;
                        a[q][i] = (x * s + y * c) * phase;
                    }
                }
            }
            if off < 1e-15 {
                break;
            }
        }
        a.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect()
    }

    #[test]
    fn jacobi_oracle_matches_on_random_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let m = gaussian_matrix(8, 8, &mut rng);
            let oracle: f64 = jacobi_singular_values(&m).iter().sum();
            assert!((trace_norm(&m) - oracle).abs() < 1e-10 * oracle.max(1.0));
        }
    }

    #[test]
    fn diag_plus_minus_one_has_trace_norm_two() {
        let m = Observable::diagonal(&[1.0, -1.0]);
        assert!((trace_norm(m.matrix()) - 2.0).abs() < 1e-15);
        assert!((trace_norm_hermitian(m.matrix()) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_has_zero_norms() {
        let z = CMatrix::zeros(3, 3);
        assert_eq!(trace_norm(&z), 0.0);
        assert_eq!(operator_norm(&z), 0.0);
        assert_eq!(trace_norm(&CMatrix::zeros(0, 0)), 0.0);
    }

    #[test]
    fn identity_norms() {
        let i = CMatrix::identity(9, 9);
        assert!((operator_norm(&i) - 1.0).abs() < 1e-14);
        assert!((hs_norm(&i) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn trace_norm_bounded_by_sqrt_d_times_hs() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for k in 0..100 {
            let d = 2 + k % 7;
            let m = gaussian_matrix(d, d, &mut rng);
            assert!(trace_norm(&m) <= (d as f64).sqrt() * hs_norm(&m) + 1e-12);
        }
    }

    #[test]
    fn hermitian_fast_path_agrees_with_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for d in [1, 2, 3, 4, 6] {
            let g = gaussian_matrix(d, d, &mut rng);
            let h = &g + g.adjoint();
            assert!((trace_norm_hermitian(&h) - trace_norm(&h)).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_examples() {
        let shape = HilbertDim::flat(3).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.5, 0.25, 0.25], shape).unwrap();
        assert!((von_neumann_entropy(&rho) - 1.5 * 2f64.ln()).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(HilbertDim::flat(5).unwrap());
        assert!((von_neumann_entropy(&mixed) - 5f64.ln()).abs() < 1e-14);
        let pure = DensityMatrix::from_spectrum(vec![0.0, 1.0, 0.0], shape).unwrap();
        assert_eq!(von_neumann_entropy(&pure), 0.0);
        assert_eq!(purity(&pure), 1.0);
    }

    #[test]
    fn unitary_invariance_of_trace_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let m = gaussian_matrix(6, 6, &mut rng);
        let u = haar_unitary(6, &mut rng);
        let rotated = &u * &m * u.adjoint();
        assert!((trace_norm(&rotated) - trace_norm(&m)).abs() < 1e-9);
    }

    #[test]
    fn observable_norm_is_largest_singular_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let m = gaussian_matrix(5, 5, &mut rng);
        let obs = Observable::new(m.clone()).unwrap();
        let oracle = jacobi_singular_values(&m).into_iter().fold(0.0, f64::max);
        assert!((obs.norm() - oracle).abs() < 1e-10);
        assert!(Observable::new(CMatrix::zeros(2, 3)).is_err());
    }
}
