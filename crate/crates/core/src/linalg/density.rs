use std::sync::OnceLock;

use super::norms::entropy_of_spectrum;
use super::{hermiticity_defect, partial_trace_b, partial_trace_pure, HilbertDim, PureState};
use crate::{CMatrix, CVector, Complex64, Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const NEGATIVE_CLAMP: f64 = 1e-12;

/// Eigenbasis of a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    /// Eigenvector `k` is the computational basis vector `|order[k]⟩`.
    /// Diagonal states never need a dense `D × D` matrix.
    Standard(Vec<usize>),
    /// Eigenvector `k` is column `k`.
    Dense(CMatrix),
}

/// Hermitian eigendecomposition sorted by descending eigenvalue.
///
/// Each eigenvector is phase-fixed so that its first component with modulus
/// above 1e-10 is real and positive; exact ties keep the order in which the
/// first significant component appears. Runs are reproducible bit for bit.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut vectors = eig.eigenvectors;
    let mut lead = vec![0usize; n];
    for (k, lead_k) in lead.iter_mut().enumerate() {
        let mut col = vectors.column_mut(k);
        if let Some(i) = (0..n).find(|&i| col[i].norm() > 1e-10) {
            let phase = col[i] / col[i].norm();
            col.iter_mut().for_each(|z| *z *= phase.conj());
            *lead_k = i;
        }
    }
    let values = eig.eigenvalues;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(lead[a].cmp(&lead[b]))
    });
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    (sorted_values, sorted_vectors)
}

/// Hermitian, positive, unit-trace operator stored with its spectral
/// decomposition `ρ = Σ_n p_n |n⟩⟨n|`, `p` descending.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    eigenvalues: Vec<f64>,
    basis: Basis,
    shape: HilbertDim,
    matrix: OnceLock<CMatrix>,
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.eigenvalues == other.eigenvalues && self.basis == other.basis && self.shape == other.shape
    }
}

fn validate_spectrum(p: &mut [f64]) -> Result<()> {
    for x in p.iter_mut() {
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite eigenvalue {x}")));
        }
        if *x < -NEGATIVE_CLAMP {
            return Err(Error::NegativeEigenvalue(*x));
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let tr: f64 = p.iter().sum();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidTrace(tr));
    }
    Ok(())
}

impl DensityMatrix {
    /// Diagonalises a Hermitian matrix. Eigenvalues in `[-1e-12, 0)` are
    /// clamped to zero; anything more negative is an error.
    pub fn from_matrix(m: CMatrix, shape: HilbertDim) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidShape(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        shape.check(m.nrows())?;
        let defect = hermiticity_defect(&m);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let (mut p, vectors) = hermitian_eigen(&m);
        validate_spectrum(&mut p)?;
        let matrix = OnceLock::new();
        let _ = matrix.set(m);
        Ok(Self { eigenvalues: p, basis: Basis::Dense(vectors), shape, matrix })
    }

    /// Diagonal density matrix `diag(p)` in the computational basis.
    /// `p` may be in any order; it is sorted internally.
    pub fn from_spectrum(mut p: Vec<f64>, shape: HilbertDim) -> Result<Self> {
        shape.check(p.len())?;
        validate_spectrum(&mut p)?;
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap_or(std::cmp::Ordering::Equal));
        let eigenvalues = order.iter().map(|&k| p[k]).collect();
        Ok(Self { eigenvalues, basis: Basis::Standard(order), shape, matrix: OnceLock::new() })
    }

    /// `Σ p_k |v_k⟩⟨v_k|` for the columns `v_k` of a unitary `vectors`.
    /// The caller guarantees unitarity (checked in debug builds only).
    pub fn from_eigen(p: Vec<f64>, vectors: CMatrix, shape: HilbertDim) -> Result<Self> {
        shape.check(p.len())?;
        if vectors.nrows() != p.len() || vectors.ncols() != p.len() {
            return Err(Error::DimensionMismatch { expected: p.len(), got: vectors.ncols() });
        }
        debug_assert!(vectors.nrows() > 256 || super::unitarity_defect(&vectors) < 1e-9);
        let mut p = p;
        validate_spectrum(&mut p)?;
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap_or(std::cmp::Ordering::Equal));
        let eigenvalues = order.iter().map(|&k| p[k]).collect();
        let sorted = CMatrix::from_fn(p.len(), p.len(), |i, j| vectors[(i, order[j])]);
        Ok(Self { eigenvalues, basis: Basis::Dense(sorted), shape, matrix: OnceLock::new() })
    }

    /// `I / D`.
    pub fn maximally_mixed(shape: HilbertDim) -> Self {
        let d = shape.dim();
        Self::from_spectrum(vec![1.0 / d as f64; d], shape).expect("uniform spectrum is valid")
    }

    /// `P_R / d_R` with `P_R` the projection onto the first `rank` basis vectors.
    pub fn normalized_projection(rank: usize, shape: HilbertDim) -> Result<Self> {
        let d = shape.dim();
        if rank == 0 || rank > d {
            return Err(Error::InvalidParameter(format!("projection rank {rank} not in 1..={d}")));
        }
        let mut p = vec![0.0; d];
        p[..rank].iter_mut().for_each(|x| *x = 1.0 / rank as f64);
        Self::from_spectrum(p, shape)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &PureState) -> Self {
        let d = psi.dim();
        let mut vectors = CMatrix::zeros(d, d);
        vectors.set_column(0, psi.amplitudes());
        // Complete to an orthonormal basis; the other eigenvalues are zero so
        // only column 0 matters for every derived quantity.
        let mut k = 1;
        for e in 0..d {
            if k == d {
                break;
            }
            let mut v = CVector::zeros(d);
            v[e] = Complex64::new(1.0, 0.0);
            for j in 0..k {
                let c = vectors.column(j).dotc(&v);
                v -= vectors.column(j) * c;
            }
            let n = v.norm();
            if n > 1e-8 {
                vectors.set_column(k, &(v / Complex64::new(n, 0.0)));
                k += 1;
            }
        }
        let mut p = vec![0.0; d];
        p[0] = 1.0;
        Self { eigenvalues: p, basis: Basis::Dense(vectors), shape: psi.shape(), matrix: OnceLock::new() }
    }

    pub fn shape(&self) -> HilbertDim {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// `‖ρ‖ = p_1`.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        self.eigenvalues.iter().map(|p| p * p).sum()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of_spectrum(&self.eigenvalues)
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&p| p > tol).count()
    }

    pub fn with_shape(&self, shape: HilbertDim) -> Result<Self> {
        shape.check(self.dim())?;
        Ok(Self { shape, ..self.clone() })
    }

    /// Eigenvector `k` in the computational basis.
    pub fn eigenvector(&self, k: usize) -> CVector {
        match &self.basis {
            Basis::Standard(order) => {
                let mut v = CVector::zeros(self.dim());
                v[order[k]] = Complex64::new(1.0, 0.0);
                v
            }
            Basis::Dense(u) => u.column(k).into_owned(),
        }
    }

    /// Eigenvector matrix `U` (columns ordered like the eigenvalues).
    pub fn eigenvector_matrix(&self) -> CMatrix {
        match &self.basis {
            Basis::Standard(order) => {
                let d = self.dim();
                let mut u = CMatrix::zeros(d, d);
                for (k, &i) in order.iter().enumerate() {
                    u[(i, k)] = Complex64::new(1.0, 0.0);
                }
                u
            }
            Basis::Dense(u) => u.clone(),
        }
    }

    /// Maps coordinates in the eigenbasis to the computational basis: `U c`.
    pub fn from_eigen_coords(&self, coords: &CVector) -> CVector {
        match &self.basis {
            Basis::Standard(order) => {
                let mut v = CVector::zeros(self.dim());
                for (k, &i) in order.iter().enumerate() {
                    v[i] = coords[k];
                }
                v
            }
            Basis::Dense(u) => u * coords,
        }
    }

    /// Coordinates of `v` in the eigenbasis: `U† v`.
    pub fn to_eigen_coords(&self, v: &CVector) -> CVector {
        match &self.basis {
            Basis::Standard(order) => CVector::from_iterator(self.dim(), order.iter().map(|&i| v[i])),
            Basis::Dense(u) => u.adjoint() * v,
        }
    }

    /// `U† A U`, the matrix of `A` in the eigenbasis.
    pub fn to_eigen_frame(&self, a: &CMatrix) -> CMatrix {
        match &self.basis {
            Basis::Standard(order) => CMatrix::from_fn(self.dim(), self.dim(), |i, j| a[(order[i], order[j])]),
            Basis::Dense(u) => u.adjoint() * a * u,
        }
    }

    /// Dense matrix `U diag(p) U†`, computed once.
    pub fn matrix(&self) -> &CMatrix {
        self.matrix.get_or_init(|| match &self.basis {
            Basis::Standard(order) => {
                let d = self.dim();
                let mut m = CMatrix::zeros(d, d);
                for (k, &i) in order.iter().enumerate() {
                    m[(i, i)] = Complex64::new(self.eigenvalues[k], 0.0);
                }
                m
            }
            Basis::Dense(u) => {
                let mut scaled = u.clone();
                for (k, &p) in self.eigenvalues.iter().enumerate() {
                    scaled.column_mut(k).scale_mut(p);
                }
                scaled * u.adjoint()
            }
        })
    }

    /// `tr_b ρ` as a raw `d_a × d_a` matrix, assembled from the spectrum:
    /// `Σ_k p_k tr_b |v_k⟩⟨v_k|`.
    pub fn reduced_a_matrix(&self) -> CMatrix {
        let HilbertDim { d_a, d_b } = self.shape;
        match &self.basis {
            Basis::Standard(order) => {
                let mut m = CMatrix::zeros(d_a, d_a);
                for (k, &i) in order.iter().enumerate() {
                    m[(i / d_b, i / d_b)] += Complex64::new(self.eigenvalues[k], 0.0);
                }
                m
            }
            Basis::Dense(u) => {
                if let Some(m) = self.matrix.get() {
                    return partial_trace_b(m, self.shape).expect("shape checked");
                }
                let mut m = CMatrix::zeros(d_a, d_a);
                for (k, &p) in self.eigenvalues.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let col = u.column(k);
                    let part = partial_trace_pure(col.as_slice(), self.shape).expect("shape checked");
                    m += part * Complex64::new(p, 0.0);
                }
                m
            }
        }
    }

    /// `tr_b ρ` as a density matrix on `H_a` (flat shape).
    pub fn reduced_a(&self) -> Result<DensityMatrix> {
        let m = self.reduced_a_matrix();
        let shape = HilbertDim::flat(self.shape.d_a)?;
        // Round-off in the partial sum can leave ~1e-16 anti-Hermitian parts.
        let sym = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        DensityMatrix::from_matrix(sym, shape)
    }

    /// Same eigenvectors, new eigenvalues `p` (indexed like
    /// [`eigenvalues`](Self::eigenvalues), re-sorted afterwards).
    pub fn with_spectrum(&self, p: Vec<f64>) -> Result<DensityMatrix> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        match &self.basis {
            Basis::Standard(order) => {
                let mut diag = vec![0.0; self.dim()];
                for (k, &i) in order.iter().enumerate() {
                    diag[i] = p[k];
                }
                DensityMatrix::from_spectrum(diag, self.shape)
            }
            Basis::Dense(u) => DensityMatrix::from_eigen(p, u.clone(), self.shape),
        }
    }

    /// `V ρ V†` for a unitary `v`.
    pub fn conjugate(&self, v: &CMatrix) -> Result<DensityMatrix> {
        if v.nrows() != self.dim() || v.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.nrows() });
        }
        let rotated = match &self.basis {
            Basis::Standard(order) => CMatrix::from_fn(self.dim(), self.dim(), |i, k| v[(i, order[k])]),
            Basis::Dense(u) => v * u,
        };
        Ok(Self {
            eigenvalues: self.eigenvalues.clone(),
            basis: Basis::Dense(rotated),
            shape: self.shape,
            matrix: OnceLock::new(),
        })
    }

    /// `ρ^{-1}` applied as a quadratic form: `⟨ψ|ρ⁻¹|ψ⟩`. Requires full rank.
    pub fn inverse_quadratic_form(&self, psi: &CVector) -> Result<f64> {
        let pmin = *self.eigenvalues.last().unwrap_or(&0.0);
        if pmin <= 0.0 {
            return Err(Error::SingularDensity(pmin));
        }
        let c = self.to_eigen_coords(psi);
        Ok(c.iter().zip(&self.eigenvalues).map(|(z, p)| z.norm_sqr() / p).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, haar_unitary, unitarity_defect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_rho(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = gaussian_matrix(d, d, rng);
        let m = &g * g.adjoint();
        let tr = m.trace();
        m / tr
    }

    #[test]
    fn from_matrix_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_rho(7, &mut rng);
        let rho = DensityMatrix::from_matrix(m.clone(), HilbertDim::flat(7).unwrap()).unwrap();
        let p = rho.eigenvalues();
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let u = rho.eigenvector_matrix();
        assert!(unitarity_defect(&u) < 1e-10);
        let mut scaled = u.clone();
        for k in 0..7 {
            scaled.column_mut(k).scale_mut(p[k]);
        }
        assert!((scaled * u.adjoint() - m).norm() < 1e-10);
        assert!((rho.norm() - crate::linalg::operator_norm(&rho.matrix().clone())).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_phase_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_rho(5, &mut rng);
        let (_, u) = hermitian_eigen(&m);
        for k in 0..5 {
            let first = u.column(k).iter().copied().find(|z| z.norm() > 1e-10).unwrap();
            assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        }
    }

    #[test]
    fn clamps_tiny_negative_and_rejects_large_negative() {
        let shape = HilbertDim::flat(3).unwrap();
        let ok = DensityMatrix::from_spectrum(vec![0.5, 0.5 + 5e-13, -5e-13], shape).unwrap();
        assert_eq!(ok.eigenvalues()[2], 0.0);
        let bad = DensityMatrix::from_spectrum(vec![0.6, 0.5, -0.1], shape);
        assert!(matches!(bad, Err(Error::NegativeEigenvalue(_))));
        let trace = DensityMatrix::from_spectrum(vec![0.6, 0.5, 0.1], shape);
        assert!(matches!(trace, Err(Error::InvalidTrace(_))));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(
            DensityMatrix::from_matrix(m, HilbertDim::flat(2).unwrap()),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn purity_chain_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..12 {
            let rho = DensityMatrix::from_matrix(random_rho(d, &mut rng), HilbertDim::flat(d).unwrap()).unwrap();
            let (pur, norm) = (rho.purity(), rho.norm());
            assert!(pur <= norm + 1e-15 && norm <= pur.sqrt() + 1e-15 && pur.sqrt() <= norm.sqrt() + 1e-15);
        }
    }

    #[test]
    fn projection_purity_is_inverse_rank() {
        let shape = HilbertDim::flat(10).unwrap();
        let rho = DensityMatrix::normalized_projection(4, shape).unwrap();
        assert!((rho.purity() - 0.25).abs() < 1e-15);
        assert!(DensityMatrix::normalized_projection(0, shape).is_err());
    }

    #[test]
    fn spectral_and_dense_partial_traces_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = HilbertDim::bipartite(3, 4).unwrap();
        let rho = DensityMatrix::from_matrix(random_rho(12, &mut rng), shape).unwrap();
        let fresh = DensityMatrix::from_eigen(rho.eigenvalues().to_vec(), rho.eigenvector_matrix(), shape).unwrap();
        let a = fresh.reduced_a_matrix();
        let b = partial_trace_b(rho.matrix(), shape).unwrap();
        assert!((a - b).norm() < 1e-12);

        let diag = DensityMatrix::from_spectrum((1..=12).map(|k| k as f64 / 78.0).collect(), shape).unwrap();
        let a = diag.reduced_a_matrix();
        let b = partial_trace_b(diag.matrix(), shape).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn conjugation_preserves_spectrum_and_coordinates_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = HilbertDim::flat(6).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![0.3, 0.25, 0.2, 0.15, 0.06, 0.04], shape).unwrap();
        let v = haar_unitary(6, &mut rng);
        let r2 = rho.conjugate(&v).unwrap();
        let direct = &v * rho.matrix() * v.adjoint();
        assert!((r2.matrix() - direct).norm() < 1e-12);
        let x = gaussian_matrix(6, 1, &mut rng).column(0).into_owned();
        let back = r2.from_eigen_coords(&r2.to_eigen_coords(&x));
        assert!((back - x).norm() < 1e-12);
    }

    #[test]
    fn pure_projector_has_unit_purity() {
        let shape = HilbertDim::bipartite(2, 3).unwrap();
        let psi = PureState::basis(shape, 4).unwrap();
        let rho = DensityMatrix::pure(&psi);
        assert!((rho.purity() - 1.0).abs() < 1e-15);
        assert!(unitarity_defect(&rho.eigenvector_matrix()) < 1e-12);
        let ra = rho.reduced_a().unwrap();
        assert!((ra.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_quadratic_form_needs_full_rank() {
        let shape = HilbertDim::flat(2).unwrap();
        let rho = DensityMatrix::from_spectrum(vec![1.0, 0.0], shape).unwrap();
        let v = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(matches!(rho.inverse_quadratic_form(&v), Err(Error::SingularDensity(_))));
    }
}
