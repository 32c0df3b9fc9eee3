//! Dense complex linear algebra for finite-dimensional quantum states.
//!
//! Every object here is immutable after construction. Density matrices
//! carry their spectral decomposition; the dense matrix form is only
//! materialised on demand.

mod density;
mod dim;
mod evolve;
mod norms;
mod partial;
mod random;
mod state;

pub use density::{hermitian_eigen, Basis, DensityMatrix};
pub use dim::HilbertDim;
pub use evolve::{evolve_density, evolve_state, Propagator};
pub use norms::{
    hs_norm, operator_norm, purity, singular_values, trace_norm, trace_norm_hermitian,
    von_neumann_entropy, Observable,
};
pub(crate) use norms::entropy_of_spectrum;
pub use partial::{partial_trace_b, partial_trace_pure};
pub use random::{complex_normal, gaussian_matrix, gue_hamiltonian, haar_isometry, haar_unitary};
pub use state::PureState;

use crate::{CMatrix, Complex64};

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// `‖U†U − I‖_max`, used to validate unitaries in tests and debug builds.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}
