use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of `H = H_a ⊗ H_b`. A flat space of dimension `D` is `(D, 1)`.
///
/// Flat indices follow the row-major tensor convention: the basis vector
/// `|i⟩_a ⊗ |k⟩_b` has index `i * d_b + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertDim {
    pub d_a: usize,
    pub d_b: usize,
}

impl HilbertDim {
    pub fn bipartite(d_a: usize, d_b: usize) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::InvalidShape(format!("d_a={d_a}, d_b={d_b} must be positive")));
        }
        d_a.checked_mul(d_b)
            .ok_or_else(|| Error::InvalidShape(format!("d_a*d_b overflows for {d_a}x{d_b}")))?;
        Ok(Self { d_a, d_b })
    }

    pub fn flat(d: usize) -> Result<Self> {
        Self::bipartite(d, 1)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn check(&self, len: usize) -> Result<()> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), got: len })
        }
    }
}

impl std::fmt::Display for HilbertDim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.d_a, self.d_b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_factor() {
        assert!(HilbertDim::bipartite(0, 3).is_err());
        assert!(HilbertDim::bipartite(3, 0).is_err());
    }

    #[test]
    fn flat_is_d_by_one() {
        let s = HilbertDim::flat(7).unwrap();
        assert_eq!((s.d_a, s.d_b, s.dim()), (7, 1, 7));
        assert!(s.check(7).is_ok());
        assert!(matches!(s.check(6), Err(Error::DimensionMismatch { .. })));
    }
}
