use super::{partial_trace_pure, HilbertDim};
use crate::{CMatrix, CVector, Complex64, Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// A unit vector `ψ` in `H_a ⊗ H_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
    shape: HilbertDim,
}

impl PureState {
    /// Wraps `amplitudes`, which must already have unit norm within 1e-12.
    pub fn new(amplitudes: CVector, shape: HilbertDim) -> Result<Self> {
        shape.check(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidParameter(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, shape })
    }

    /// Divides by the Euclidean norm. Fails on the zero vector.
    pub fn normalized(mut amplitudes: CVector, shape: HilbertDim) -> Result<Self> {
        shape.check(amplitudes.len())?;
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot normalise vector of norm {norm}")));
        }
        amplitudes.unscale_mut(norm);
        Ok(Self { amplitudes, shape })
    }

    pub(crate) fn from_unit_unchecked(amplitudes: CVector, shape: HilbertDim) -> Self {
        debug_assert_eq!(amplitudes.len(), shape.dim());
        Self { amplitudes, shape }
    }

    /// Computational basis vector `|n⟩`.
    pub fn basis(shape: HilbertDim, n: usize) -> Result<Self> {
        if n >= shape.dim() {
            return Err(Error::InvalidParameter(format!("basis index {n} out of range {}", shape.dim())));
        }
        let mut v = CVector::zeros(shape.dim());
        v[n] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v, shape })
    }

    /// `φ_a ⊗ χ_b`, both normalised first.
    pub fn product(a: &CVector, b: &CVector) -> Result<Self> {
        let shape = HilbertDim::bipartite(a.len(), b.len())?;
        let (na, nb) = (a.norm(), b.norm());
        if na == 0.0 || nb == 0.0 {
            return Err(Error::InvalidParameter("product factor is the zero vector".into()));
        }
        let mut v = CVector::zeros(shape.dim());
        for i in 0..a.len() {
            for k in 0..b.len() {
                v[i * b.len() + k] = a[i] * b[k] / (na * nb);
            }
        }
        Ok(Self { amplitudes: v, shape })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn shape(&self) -> HilbertDim {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Same amplitudes viewed with a different bipartition.
    pub fn with_shape(self, shape: HilbertDim) -> Result<Self> {
        shape.check(self.amplitudes.len())?;
        Ok(Self { shape, ..self })
    }

    /// Amplitudes as the `d_a × d_b` coefficient matrix `Ψ_{ik} = ⟨i,k|ψ⟩`.
    pub fn coefficient_matrix(&self) -> CMatrix {
        let HilbertDim { d_a, d_b } = self.shape;
        CMatrix::from_fn(d_a, d_b, |i, k| self.amplitudes[i * d_b + k])
    }

    /// `ρ_a^ψ = tr_b |ψ⟩⟨ψ|` as a raw `d_a × d_a` matrix.
    pub fn reduced_a(&self) -> CMatrix {
        partial_trace_pure(self.amplitudes.as_slice(), self.shape)
            .expect("shape validated at construction")
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, a: &CMatrix) -> Result<Complex64> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: a.nrows() });
        }
        Ok(self.amplitudes.dotc(&(a * &self.amplitudes)))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn new_rejects_non_unit() {
        let shape = HilbertDim::flat(2).unwrap();
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(PureState::new(v.clone(), shape).is_err());
        let s = PureState::normalized(v, shape).unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_cannot_be_normalised() {
        let shape = HilbertDim::flat(3).unwrap();
        assert!(PureState::normalized(CVector::zeros(3), shape).is_err());
    }

    #[test]
    fn product_layout_is_row_major() {
        let a = CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let b = CVector::from_vec(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let s = PureState::product(&a, &b).unwrap();
        assert_eq!(s.shape(), HilbertDim::bipartite(2, 3).unwrap());
        assert_eq!(s.amplitudes()[1 * 3 + 2], c(1.0, 0.0));
        let psi = s.coefficient_matrix();
        assert_eq!(psi[(1, 2)], c(1.0, 0.0));
    }
}
