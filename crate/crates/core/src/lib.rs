//! Certified numerics for incompressible Navier-Stokes on the d-dimensional
//! torus `[0, 2π]^d`, formulated in Fourier space for zero-mean, divergence-free
//! vector fields.
//!
//! The crate has two halves that meet in the middle:
//!
//! * **Certified constants.** Two-sided brackets for the lattice kernel
//!   `K_ω(k) = Σ_{h ∉ {0,k}} |h|^{-2ω} |k−h|^{-2}`, a certificate for its
//!   supremum over `k ≠ 0`, the induced bilinear-estimate constant
//!   `K_ω = (2π)^{-d/2} √(sup K_ω)`, an upper bound `N_ω` for the heat-semigroup
//!   convolution integral, and the resulting smallness threshold
//!   `1/(4 N_ω K_ω)` for global existence of small mild solutions.
//!   Every truncation or quadrature step carries an explicit remainder bound,
//!   so each reported interval genuinely encloses the mathematical value.
//!
//! * **A-posteriori control.** A truncated-Galerkin mild-solution integrator
//!   produces an approximate trajectory; residual and growth estimators feed a
//!   Volterra-type control inequality whose solution `R(t)` certifies a bound
//!   `‖u(t) − u_ap(t)‖_{H^1} ≤ R(t)` on the distance to the exact solution.
//!
//! All spectral data lives on the integer lattice: a field is a finite map
//! `k ↦ v_k ∈ C^d` over `0 < |k| ≤ M` with the reality constraint
//! `v_{-k} = conj(v_k)`. Norms are the zero-mean Sobolev norms
//! `‖v‖_n = (Σ_k |k|^{2n} |v_k|^2)^{1/2}`.

pub mod aposteriori;
pub mod certificate;
mod error;
pub mod field;
pub mod kernel;
pub mod lattice;
pub mod nonlinearity;
pub mod params;
pub mod semigroup;
pub mod singular;
pub mod solver;
mod sum;
pub mod unimodal;

pub use error::Error;
pub use field::FourierVectorField;
pub use lattice::LatticePoint;
pub use params::SpaceParams;

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
