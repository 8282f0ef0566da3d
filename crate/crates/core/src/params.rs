//! Global problem parameters: spatial dimension and the smoothing exponent.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dimension of the torus and the Sobolev smoothing exponent `ω`.
///
/// `ω` plays two roles. The bilinear estimate bounds the nonlinearity from
/// `H^1 × H^1` into `H^{-ω}`, which requires the lattice kernel sum to
/// converge: `ω > d/2 − 1`. The semigroup then has to lift `H^{-ω}` back to
/// `H^1` with an integrable singularity, which additionally requires `ω < 1`.
/// Kernel-only computations accept the first range; anything that touches the
/// smoothing estimate insists on the intersection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    d: usize,
    omega: f64,
}

impl SpaceParams {
    /// Creates parameters, checking only the structural constraints
    /// (`d ∈ {2,3}`, `ω` finite). Range checks against `d` are performed by
    /// [`SpaceParams::require_kernel_range`] / [`SpaceParams::require_solver_range`]
    /// at the point of use.
    pub fn new(d: usize, omega: f64) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::UnsupportedDimension { d });
        }
        if !omega.is_finite() {
            return Err(Error::NotFinite {
                name: "omega",
                value: omega,
            });
        }
        Ok(SpaceParams { d, omega })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `(2π)^{-d/2}`, the prefactor tying the lattice convolution to the
    /// product of functions in the normalized Fourier basis.
    pub fn fourier_prefactor(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powf(-(self.d as f64) / 2.0)
    }

    /// Requires `ω > d/2 − 1`, the convergence range of the lattice kernel.
    pub fn require_kernel_range(&self) -> Result<()> {
        let lo = self.d as f64 / 2.0 - 1.0;
        if self.omega <= lo {
            return Err(Error::OutOfRange {
                name: "omega",
                value: self.omega,
                requirement: format!("omega > d/2 - 1 = {lo} for kernel sums"),
            });
        }
        Ok(())
    }

    /// Requires `d/2 − 1 < ω < 1`, the range on which both the bilinear
    /// estimate and the semigroup smoothing bound are available.
    pub fn require_solver_range(&self) -> Result<()> {
        self.require_kernel_range()?;
        if self.omega >= 1.0 {
            return Err(Error::OutOfRange {
                name: "omega",
                value: self.omega,
                requirement: "omega < 1 for semigroup smoothing".to_string(),
            });
        }
        Ok(())
    }
}
