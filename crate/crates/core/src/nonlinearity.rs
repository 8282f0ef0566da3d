//! The Navier–Stokes bilinear map `P(v, w) = −L(v·∂w)` on truncated Fourier
//! fields, and the empirical side of the bilinear estimate
//! `‖L(v·∂w)‖_{−ω} ≤ K_ω ‖v‖₁ ‖w‖₁`.
//!
//! In coefficients, with the normalized convolution prefactor,
//!
//! ```text
//!   (v·∂w)_k = (2π)^{-d/2} Σ_h ( v_h · i(k-h) ) w_{k-h},
//! ```
//!
//! after which the result is negated, Leray-projected, and truncated to
//! `|k| ≤ M_out`. The convolution is computed *exactly* over the stored
//! modes — no FFT, no aliasing: with `M_out = M_v + M_w` every product mode
//! is retained, which keeps estimate tests exact and makes the solver's
//! Galerkin projection a separate, visible step.
//!
//! The output is assembled from its lexicographically positive half and
//! mirrored, so conjugate symmetry is exact by construction; divergence
//! freeness is exact because each coefficient passes through the Leray
//! projection.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::{self, CoeffVector, FourierScalarField, FourierVectorField};
use crate::lattice::{self, LatticePoint};
use crate::sum::NeumaierSum;
use crate::{Error, Result};

/// Dense box lookup for one field's coefficients: O(1) access to `w_{k-h}`
/// in the inner convolution loop, where a tree lookup would dominate.
struct DenseField {
    d: usize,
    m: i64,
    data: Vec<Option<CoeffVector>>,
}

impl DenseField {
    fn build(f: &FourierVectorField) -> Self {
        let d = f.params().d();
        let m = f.cutoff() as i64;
        let side = (2 * m + 1) as usize;
        let cells = if d == 2 { side * side } else { side * side * side };
        let mut data = vec![None; cells];
        for (k, c) in f.modes() {
            let kc = k.coords();
            let mut idx = (kc[0] + m) as usize * side + (kc[1] + m) as usize;
            if d == 3 {
                idx = idx * side + (kc[2] + m) as usize;
            }
            data[idx] = Some(*c);
        }
        DenseField { d, m, data }
    }

    #[inline]
    fn get(&self, k: [i64; 3]) -> Option<&CoeffVector> {
        if k[0].abs() > self.m || k[1].abs() > self.m {
            return None;
        }
        if self.d == 2 {
            if k[2] != 0 {
                return None;
            }
        } else if k[2].abs() > self.m {
            return None;
        }
        let side = (2 * self.m + 1) as usize;
        let mut idx = (k[0] + self.m) as usize * side + (k[1] + self.m) as usize;
        if self.d == 3 {
            idx = idx * side + (k[2] + self.m) as usize;
        }
        self.data[idx].as_ref()
    }
}

/// The bilinear term `P(v, w) = −L(v·∂w)` truncated to `|k| ≤ m_out`.
///
/// `v` must be divergence-free (the integration-by-parts structure of the
/// estimate uses `div v = 0`); `w` only needs to be a valid zero-mean field.
/// The output is zero-mean, exactly conjugate-symmetric, and exactly
/// divergence-free.
pub fn bilinear_p(
    v: &FourierVectorField,
    w: &FourierVectorField,
    m_out: u32,
) -> Result<FourierVectorField> {
    if v.params() != w.params() {
        return Err(Error::Incompatible {
            context: format!(
                "bilinear operands disagree: (d={}, omega={}) vs (d={}, omega={})",
                v.params().d(),
                v.params().omega(),
                w.params().d(),
                w.params().omega()
            ),
        });
    }
    if !v.is_divergence_free() {
        return Err(Error::InvalidField {
            context: "bilinear map requires divergence-free v".to_string(),
        });
    }
    let params = v.params();
    let d = params.d();
    let pref = params.fourier_prefactor();
    let m_eff = m_out.min(v.cutoff() + w.cutoff());

    let table = DenseField::build(w);
    let vmodes: Vec<(LatticePoint, CoeffVector)> = v.modes().map(|(k, c)| (*k, *c)).collect();
    let candidates: Vec<LatticePoint> = lattice::ball(d, m_eff)
        .into_iter()
        .filter(|k| k.is_lex_positive())
        .collect();

    let half: Vec<(LatticePoint, CoeffVector)> = candidates
        .par_iter()
        .filter_map(|k| {
            let kc = k.coords();
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            for (h, vh) in &vmodes {
                let hc = h.coords();
                let g = [kc[0] - hc[0], kc[1] - hc[1], kc[2] - hc[2]];
                if let Some(wg) = table.get(g) {
                    let dot =
                        vh[0] * g[0] as f64 + vh[1] * g[1] as f64 + vh[2] * g[2] as f64;
                    let idot = Complex64::new(-dot.im, dot.re); // i · (v_h · g)
                    acc[0] += idot * wg[0];
                    acc[1] += idot * wg[1];
                    acc[2] += idot * wg[2];
                }
            }
            let c = [-(pref * acc[0]), -(pref * acc[1]), -(pref * acc[2])];
            let b = field::leray_coeff(k, &c);
            if b[0].norm_sqr() + b[1].norm_sqr() + b[2].norm_sqr() == 0.0 {
                None
            } else {
                Some((*k, b))
            }
        })
        .collect();

    Ok(FourierVectorField::from_half_modes(
        params, m_out, true, half,
    ))
}

/// `P(v, v)` with every unordered mode pair visited once.
///
/// The square's convolution sum is symmetric under `h ↔ g = k − h`, and the
/// pair `{h, g}` contributes both transport terms
/// `(v_h · ig) v_g + (v_g · ih) v_h`. Iterating `h` through the stored
/// coordinate-lexicographic mode order, the pairs with `h` strictly below `g`
/// form a *prefix*: `k − 2h` is lexicographically decreasing in `h`, so the
/// inner loop breaks at the sign change instead of scanning the rest. Same
/// result as `bilinear_p(v, v, m_out)` up to summation order, at about half
/// the lookup and loop cost — this is the hot path of the time stepper, where
/// every product is a square.
pub fn bilinear_p_square(v: &FourierVectorField, m_out: u32) -> Result<FourierVectorField> {
    if !v.is_divergence_free() {
        return Err(Error::InvalidField {
            context: "bilinear map requires divergence-free v".to_string(),
        });
    }
    let params = v.params();
    let d = params.d();
    let pref = params.fourier_prefactor();
    let m_eff = m_out.min(2 * v.cutoff());

    let table = DenseField::build(v);
    let vmodes: Vec<(LatticePoint, CoeffVector)> = v.modes().map(|(k, c)| (*k, *c)).collect();
    let candidates: Vec<LatticePoint> = lattice::ball(d, m_eff)
        .into_iter()
        .filter(|k| k.is_lex_positive())
        .collect();

    let half: Vec<(LatticePoint, CoeffVector)> = candidates
        .par_iter()
        .filter_map(|k| {
            let kc = k.coords();
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            for (h, vh) in &vmodes {
                let hc = h.coords();
                let g = [kc[0] - hc[0], kc[1] - hc[1], kc[2] - hc[2]];
                // Lex sign of k − 2h: positive while h is the smaller member
                // of {h, k−h}, zero on the diagonal, then negative for every
                // later h — the scan ends at the first sign change.
                let s = [g[0] - hc[0], g[1] - hc[1], g[2] - hc[2]];
                let sign = if s[0] != 0 {
                    s[0]
                } else if s[1] != 0 {
                    s[1]
                } else {
                    s[2]
                };
                if sign < 0 {
                    break;
                }
                if let Some(vg) = table.get(g) {
                    let dot_hg =
                        vh[0] * g[0] as f64 + vh[1] * g[1] as f64 + vh[2] * g[2] as f64;
                    let idot_hg = Complex64::new(-dot_hg.im, dot_hg.re);
                    acc[0] += idot_hg * vg[0];
                    acc[1] += idot_hg * vg[1];
                    acc[2] += idot_hg * vg[2];
                    if sign > 0 {
                        let dot_gh = vg[0] * hc[0] as f64
                            + vg[1] * hc[1] as f64
                            + vg[2] * hc[2] as f64;
                        let idot_gh = Complex64::new(-dot_gh.im, dot_gh.re);
                        acc[0] += idot_gh * vh[0];
                        acc[1] += idot_gh * vh[1];
                        acc[2] += idot_gh * vh[2];
                    }
                }
            }
            let c = [-(pref * acc[0]), -(pref * acc[1]), -(pref * acc[2])];
            let b = field::leray_coeff(k, &c);
            if b[0].norm_sqr() + b[1].norm_sqr() + b[2].norm_sqr() == 0.0 {
                None
            } else {
                Some((*k, b))
            }
        })
        .collect();

    Ok(FourierVectorField::from_half_modes(
        params, m_out, true, half,
    ))
}

/// The sampled quotient `‖P(v, w)‖_{−ω} / (‖v‖₁ ‖w‖₁)`, with the product
/// computed exactly (`M_out = M_v + M_w`). Certified analysis bounds this by
/// `K_ω`; the randomized property suite checks that samples respect the bound.
pub fn bilinear_ratio(v: &FourierVectorField, w: &FourierVectorField) -> Result<f64> {
    let den = v.sobolev_norm(1.0) * w.sobolev_norm(1.0);
    if den == 0.0 {
        return Err(Error::Degenerate {
            context: "bilinear ratio against a zero field".to_string(),
        });
    }
    let p = bilinear_p(v, w, v.cutoff() + w.cutoff())?;
    Ok(p.sobolev_norm(-v.params().omega()) / den)
}

/// `‖zv − ⟨zv⟩‖_{L²}` for scalar fields: the exact convolution product with
/// the `k = 0` coefficient dropped. This is the quantity the scalar
/// multiplication estimate `‖zv − ⟨zv⟩‖_{L²} ≤ K_ω ‖z‖_ω ‖v‖₁` controls.
pub fn zero_mean_product_norm(z: &FourierScalarField, v: &FourierScalarField) -> Result<f64> {
    if z.params() != v.params() {
        return Err(Error::Incompatible {
            context: "scalar product operands have different space parameters".to_string(),
        });
    }
    let params = z.params();
    let d = params.d();
    let pref = params.fourier_prefactor();
    let m_out = z.cutoff() + v.cutoff();

    // Dense lookup for v.
    let m = v.cutoff() as i64;
    let side = (2 * m + 1) as usize;
    let cells = if d == 2 { side * side } else { side * side * side };
    let mut table: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); cells];
    for (k, c) in v.modes() {
        let kc = k.coords();
        let mut idx = (kc[0] + m) as usize * side + (kc[1] + m) as usize;
        if d == 3 {
            idx = idx * side + (kc[2] + m) as usize;
        }
        table[idx] = *c;
    }
    let lookup = |k: [i64; 3]| -> Complex64 {
        if k[0].abs() > m || k[1].abs() > m || (d == 3 && k[2].abs() > m) || (d == 2 && k[2] != 0)
        {
            return Complex64::new(0.0, 0.0);
        }
        let mut idx = (k[0] + m) as usize * side + (k[1] + m) as usize;
        if d == 3 {
            idx = idx * side + (k[2] + m) as usize;
        }
        table[idx]
    };

    // The product of conjugate-symmetric inputs is conjugate-symmetric, so
    // |c_{-k}| = |c_k|: sum the lexicographically positive half twice.
    let zmodes: Vec<(LatticePoint, Complex64)> = z.modes().map(|(k, c)| (*k, *c)).collect();
    let mut acc = NeumaierSum::new();
    for k in lattice::ball(d, m_out) {
        if !k.is_lex_positive() {
            continue;
        }
        let kc = k.coords();
        let mut c = Complex64::new(0.0, 0.0);
        for (h, zh) in &zmodes {
            let hc = h.coords();
            c += zh * lookup([kc[0] - hc[0], kc[1] - hc[1], kc[2] - hc[2]]);
        }
        acc.add(2.0 * (pref * c).norm_sqr());
    }
    Ok(acc.value().max(0.0).sqrt())
}
