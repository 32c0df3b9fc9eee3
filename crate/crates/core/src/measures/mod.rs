//! Samplers and densities for measures on the sphere of `C^D`.
//!
//! `GAP(ρ)` is built in three steps: the Gaussian `G(ρ)` with covariance
//! `ρ`, the adjusted Gaussian `GA(ρ)(dψ) = ‖ψ‖² G(ρ)(dψ)`, and the radial
//! projection of `GA(ρ)` onto the unit sphere. All three have exact,
//! rejection-free samplers in [`GapSampler`].

mod conditional;
mod delta;
mod density;
mod gaussian;
mod spec;
mod sphere;

pub use conditional::{
    born_average, born_weights, conditional_amplitudes, conditional_wavefunction, haar_conditional_amplitudes,
    sample_conditional, ConditionalSample,
};
pub use delta::{sample_delta_mixture, AtomBasis, DeltaMixture};
pub use density::{gap_density, log_gap_density, truncate_density};
pub use gaussian::{sample_ga, sample_gap, sample_gaussian, GapSampler};
pub use spec::{Draw, Measure, MeasureSpec, RhoBasis, RhoSpec, Spectrum};
pub use sphere::{sample_uniform_sphere, sample_vmf, VonMisesFisher};

use crate::linalg::{HilbertDim, PureState};
use crate::CVector;

/// Divides by the norm so every sphere sampler returns an exactly unit state.
pub(crate) fn unit_state(mut v: CVector, shape: HilbertDim) -> PureState {
    let n = v.norm();
    debug_assert!(n > 0.0);
    v.unscale_mut(n);
    PureState::from_unit_unchecked(v, shape)
}
