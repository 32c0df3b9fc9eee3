use rand::Rng;

use crate::linalg::{haar_isometry, HilbertDim, PureState};
use crate::{CMatrix, Complex64, Error, Result};

const BORN_TOL: f64 = 1e-10;

/// Outcome of measuring subsystem `b` in an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSample {
    /// Zero-based index `M` of the observed basis vector of `H_b`.
    pub basis_index: usize,
    /// `b⟨M|ψ⟩ / ‖b⟨M|ψ⟩‖`.
    pub psi_a: PureState,
    /// `‖b⟨m|ψ⟩‖²` for every `m`.
    pub born_weights: Vec<f64>,
}

/// Unnormalised conditional wave functions `φ_m = b⟨m|ψ⟩` as the columns of
/// `Ψ · conj(B)`, with `B` holding the basis vectors `|m⟩` as columns.
pub fn conditional_amplitudes(psi: &PureState, b: &CMatrix) -> Result<CMatrix> {
    let d_b = psi.shape().d_b;
    if b.nrows() != d_b || b.ncols() != d_b {
        return Err(Error::DimensionMismatch { expected: d_b, got: b.nrows() });
    }
    Ok(psi.coefficient_matrix() * b.map(|z| z.conj()))
}

/// Same law as [`conditional_amplitudes`] with `B` Haar distributed, at cost
/// `O(d_b d_a²)` instead of `O(d_b³)`.
///
/// With `Ψ† = V R` (thin QR), `Ψ conj(B) = R† V† conj(B)`, and the rows of
/// `V† conj(B)` are `d_a` orthonormal rows of a Haar unitary, i.e. `Q†` for a
/// Haar isometry `Q ∈ C^{d_b × d_a}`.
pub fn haar_conditional_amplitudes<R: Rng + ?Sized>(psi: &PureState, rng: &mut R) -> CMatrix {
    let HilbertDim { d_a, d_b } = psi.shape();
    if d_a > d_b {
        // The thin factorisation needs d_a <= d_b; fall back to a full basis.
        let b = crate::linalg::haar_unitary(d_b, rng);
        return conditional_amplitudes(psi, &b).expect("shape matches");
    }
    let r = psi.coefficient_matrix().adjoint().qr().r();
    let q = haar_isometry(d_b, d_a, rng);
    r.adjoint() * q.adjoint()
}

/// `‖φ_m‖²` for each column.
pub fn born_weights(phi: &CMatrix) -> Vec<f64> {
    phi.column_iter().map(|c| c.norm_squared()).collect()
}

/// Draws `M` from the Born weights and normalises `φ_M`.
pub fn sample_conditional<R: Rng + ?Sized>(phi: &CMatrix, rng: &mut R) -> Result<ConditionalSample> {
    let weights = born_weights(phi);
    let total: f64 = weights.iter().sum();
    if !(total > BORN_TOL) {
        return Err(Error::ZeroBornWeights);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut m = weights.len() - 1;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if acc > target && w > 0.0 {
            m = k;
            break;
        }
    }
    let col = phi.column(m).into_owned();
    let norm = col.norm();
    let shape = HilbertDim::flat(phi.nrows())?;
    let psi_a = PureState::from_unit_unchecked(col.unscale(norm), shape);
    Ok(ConditionalSample { basis_index: m, psi_a, born_weights: weights.iter().map(|w| w / total).collect() })
}

/// Samples the conditional wave function of `ψ` for the basis `B` of `H_b`.
pub fn conditional_wavefunction<R: Rng + ?Sized>(
    psi: &PureState,
    b: &CMatrix,
    rng: &mut R,
) -> Result<ConditionalSample> {
    sample_conditional(&conditional_amplitudes(psi, b)?, rng)
}

/// `Σ_m ‖φ_m‖² f(φ_m/‖φ_m‖)` over all outcomes.
pub fn born_average<F: Fn(&[Complex64]) -> f64>(phi: &CMatrix, f: F) -> f64 {
    let mut acc = 0.0;
    for col in phi.column_iter() {
        let w = col.norm_squared();
        if w > 0.0 {
            let unit: Vec<Complex64> = col.iter().map(|z| z / w.sqrt()).collect();
            acc += w * f(&unit);
        }
    }
    acc
}
