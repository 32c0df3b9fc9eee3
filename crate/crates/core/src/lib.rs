//! Numerical laboratory for GAP measures on unit spheres of
//! finite-dimensional complex Hilbert spaces.
//!
//! The crate is organised in layers:
//!
//! - [`linalg`]: states, density matrices, partial traces, norms, random
//!   unitaries and unitary evolution.
//! - [`measures`]: exact samplers for G(ρ), GA(ρ), GAP(ρ), the uniform
//!   sphere, delta mixtures and von Mises–Fisher, plus the GAP density,
//!   rank truncation and conditional wave functions.
//! - [`moments`]: the fourth-moment kernel `K_ml`, the variance bound for
//!   `⟨ψ|A|ψ⟩`, and log-space evaluators of every tail bound.
//! - [`experiments`]: parallel, reproducible Monte Carlo experiments that
//!   compare empirical tails to those bounds.
//!
//! Supporting modules: [`quad`] (adaptive Gauss–Kronrod), [`stats`]
//! (Wilson intervals, quantiles, KS tests) and [`rng`] (seeded substreams).

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod measures;
pub mod moments;
pub mod quad;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{Basis, DensityMatrix, HilbertDim, Observable, PureState};
pub use measures::{MeasureSpec, RhoSpec};
pub use moments::bounds::{BoundSpec, BoundValue};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
