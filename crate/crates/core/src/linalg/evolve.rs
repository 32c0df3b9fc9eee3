use super::{hermitian_eigen, hermiticity_defect, DensityMatrix, PureState};
use crate::{CMatrix, CVector, Complex64, Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

/// Spectral decomposition `H = V diag(E) V†` reused for `U_t = e^{-iHt}`.
#[derive(Debug, Clone)]
pub struct Propagator {
    energies: Vec<f64>,
    vectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &CMatrix) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::InvalidShape(format!("{}x{} Hamiltonian", h.nrows(), h.ncols())));
        }
        let defect = hermiticity_defect(h);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let (energies, vectors) = hermitian_eigen(h);
        Ok(Self { energies, vectors })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Eigenvalues of `H`, descending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.vectors
    }

    fn phases(&self, t: f64) -> impl Iterator<Item = Complex64> + '_ {
        self.energies.iter().map(move |&e| Complex64::from_polar(1.0, -e * t))
    }

    /// `U_t v` for an arbitrary vector.
    pub fn apply(&self, v: &CVector, t: f64) -> CVector {
        let mut c = self.vectors.adjoint() * v;
        for (z, ph) in c.iter_mut().zip(self.phases(t)) {
            *z *= ph;
        }
        &self.vectors * c
    }

    /// `U_t` as a dense matrix.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, ph) in self.phases(t).enumerate() {
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= ph);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn evolve_state(&self, psi: &PureState, t: f64) -> Result<PureState> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: psi.dim() });
        }
        Ok(PureState::from_unit_unchecked(self.apply(psi.amplitudes(), t), psi.shape()))
    }

    pub fn evolve_density(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.dim() });
        }
        rho.conjugate(&self.unitary(t))
    }
}

/// `e^{-iHt} ψ`.
pub fn evolve_state(psi: &PureState, h: &CMatrix, t: f64) -> Result<PureState> {
    Propagator::new(h)?.evolve_state(psi, t)
}

/// `e^{-iHt} ρ e^{iHt}`.
pub fn evolve_density(rho: &DensityMatrix, h: &CMatrix, t: f64) -> Result<DensityMatrix> {
    Propagator::new(h)?.evolve_density(rho, t)
}
