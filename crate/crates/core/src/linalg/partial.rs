use super::HilbertDim;
use crate::{CMatrix, Complex64, Error, Result};

/// `tr_b M` for a `D × D` matrix on `H_a ⊗ H_b`:
/// `(tr_b M)_{ij} = Σ_k M_{(i,k),(j,k)}`.
pub fn partial_trace_b(m: &CMatrix, shape: HilbertDim) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidShape(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    shape.check(m.nrows())?;
    let HilbertDim { d_a, d_b } = shape;
    let mut out = CMatrix::zeros(d_a, d_a);
    for i in 0..d_a {
        for j in 0..d_a {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d_b {
                acc += m[(i * d_b + k, j * d_b + k)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// `tr_b |ψ⟩⟨ψ| = Ψ Ψ†` where `Ψ` is the `d_a × d_b` coefficient matrix.
///
/// Works for unnormalised vectors too (the result then has trace `‖ψ‖²`).
pub fn partial_trace_pure(amplitudes: &[Complex64], shape: HilbertDim) -> Result<CMatrix> {
    shape.check(amplitudes.len())?;
    let HilbertDim { d_a, d_b } = shape;
    let mut out = CMatrix::zeros(d_a, d_a);
    for i in 0..d_a {
        let row_i = &amplitudes[i * d_b..(i + 1) * d_b];
        for j in i..d_a {
            let row_j = &amplitudes[j * d_b..(j + 1) * d_b];
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, y) in row_i.iter().zip(row_j) {
                acc += x * y.conj();
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc.conj();
        }
    }
    Ok(out)
}
