//! Assembly of the certified constants into the global-existence threshold.
//!
//! The two analytic inputs are computed independently and then combined:
//!
//! * the bilinear constant `K_ω = (2π)^{-d/2} √(sup_k K_ω(k))` from the
//!   kernel-sum certificate ([`crate::kernel`]),
//! * the semigroup constant `N_ω = sup_t ∫₀ᵗ e^{-s} μ_ω(t-s) ds` from the
//!   certified product integration ([`crate::semigroup`]).
//!
//! Initial data with `‖u₀‖₁ ≤ 1/(4 N_ω K_ω)` launch global mild solutions,
//! so the reported `threshold_lower` — the fraction rounded *down*, evaluated
//! with the *upper* ends of both constant brackets — is a certified smallness
//! radius. For scale, the certificate also displays a previously published
//! smallness radius for the same norm layout (`0.00724`); it is a static
//! comparison figure, not recomputed here.

use serde::{Deserialize, Serialize};

use crate::kernel::{k_constant, KConstant};
use crate::params::SpaceParams;
use crate::semigroup::{compute_n_bound, NBound};
use crate::Result;

/// Previously published global-existence threshold for the same `H¹` setup,
/// displayed alongside our result for comparison.
pub const PRIOR_THRESHOLD: f64 = 0.00724;

/// Default fundamental-domain radius for the kernel supremum.
pub const DEFAULT_A: u32 = 1;
/// Default kernel truncation radius.
pub const DEFAULT_LAMBDA: f64 = 150.0;
/// Default cell width for the `N_ω` grid search; fine enough to localize the
/// interior maximum to a few hundredths.
pub const DEFAULT_GRID_STEP: f64 = 5e-5;
/// Default quadrature budget for the singular integral behind `N_ω`.
pub const DEFAULT_QUAD_TOL: f64 = 1e-9;

/// Everything needed to audit the threshold: both constant certificates and
/// the parameters they were computed with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsCertificate {
    pub d: usize,
    pub omega: f64,
    pub a: u32,
    pub lambda: f64,
    pub grid_step: f64,
    pub quad_tol: f64,
    pub k: KConstant,
    pub n: NBound,
    /// Certified lower bound for `1/(4 N_ω K_ω)`.
    pub threshold_lower: f64,
    /// Static comparison figure ([`PRIOR_THRESHOLD`]).
    pub prior_threshold: f64,
}

/// Runs both constant certifications and combines them, rounding the final
/// division down so the reported threshold never overstates the certified
/// radius.
pub fn compute_constants(
    params: SpaceParams,
    a: u32,
    lambda: f64,
    grid_step: f64,
    quad_tol: f64,
) -> Result<ConstantsCertificate> {
    params.require_solver_range()?;
    let k = k_constant(params, a, lambda)?;
    let n = compute_n_bound(params.omega(), grid_step, quad_tol)?;
    let threshold_lower = 1.0 / (4.0 * n.n_upper * k.upper) * (1.0 - 4.0 * f64::EPSILON);
    Ok(ConstantsCertificate {
        d: params.d(),
        omega: params.omega(),
        a,
        lambda,
        grid_step,
        quad_tol,
        k,
        n,
        threshold_lower,
        prior_threshold: PRIOR_THRESHOLD,
    })
}
