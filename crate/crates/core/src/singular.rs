//! Product integration for weakly singular integrals.
//!
//! Two integral families in this crate share the endpoint singularity
//! `τ^{-p}` with `p = (1+ω)/2 ∈ (1/2, 1)`:
//!
//! * the semigroup constant needs `G(x) = ∫₀ˣ τ^{-p} e^{2τ} dτ`,
//! * the control inequality convolves data against the kernel
//!   `g(τ) = μ_ω(τ) e^{-Bτ}`, which equals `c_μ τ^{-p} e^{(1-B)τ}` on
//!   `(0, p]` and `e^{-Bτ}` beyond.
//!
//! In both cases the power-law factor is integrated *exactly* against a
//! polynomial fit of the remaining smooth factor, so the singularity never
//! meets a quadrature node. The fit error is bounded analytically and
//! reported alongside every value; no result of this module is used without
//! its error bound.

use crate::semigroup::SmoothingParams;
use crate::{Error, Result};

/// ∫_a^b τ^{j-p} dτ for 0 ≤ a ≤ b and j − p > −1 (exact antiderivative).
fn power_moment(p: f64, a: f64, b: f64, j: u32) -> f64 {
    let e = j as f64 + 1.0 - p;
    debug_assert!(e > 0.0);
    (b.powf(e) - a.powf(e)) / e
}

/// Certified evaluation of `G(x) = ∫₀ˣ τ^{-p} e^{2τ} dτ` for `0 ≤ x ≤ x_max`,
/// `p ∈ (0, 1)`.
///
/// The smooth factor `e^{2τ}` is replaced per interval by its three-point
/// quadratic interpolant; the resulting integrals against `τ^{-p}` are exact.
/// The interpolation error `|e^{2τ} − q(τ)| ≤ max|f'''| · H³ / (9√3)`
/// (`H` = half interval width) multiplies the local `τ^{-p}` mass, giving a
/// per-interval remainder bound accumulated into a prefix table.
#[derive(Debug, Clone)]
pub struct ExpPowerIntegral {
    p: f64,
    nodes: Vec<f64>,
    /// prefix_value[i] = certified approximation of G(nodes[i])
    prefix_value: Vec<f64>,
    /// prefix_err[i] = bound on |prefix_value[i] − G(nodes[i])|
    prefix_err: Vec<f64>,
}

impl ExpPowerIntegral {
    /// Builds the prefix table on `[0, x_max]` with total error ≤ `tol`.
    pub fn build(p: f64, x_max: f64, tol: f64) -> Result<Self> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::OutOfRange {
                name: "p",
                value: p,
                requirement: "0 < p < 1".to_string(),
            });
        }
        if x_max < 0.0 || !x_max.is_finite() {
            return Err(Error::NotFinite {
                name: "x_max",
                value: x_max,
            });
        }
        if tol <= 0.0 {
            return Err(Error::NotPositive {
                name: "tol",
                value: tol,
            });
        }
        if x_max == 0.0 {
            return Ok(ExpPowerIntegral {
                p,
                nodes: vec![0.0],
                prefix_value: vec![0.0],
                prefix_err: vec![0.0],
            });
        }
        // A-priori step size from the analytic error estimate
        //   err_total ≤ e^{2X} h³ / (9√3) · X^{1-p}/(1-p),
        // then verified a posteriori interval by interval.
        let mass_total = power_moment(p, 0.0, x_max, 0);
        let budget = (2.0 * x_max).exp() * mass_total / (9.0 * 3.0f64.sqrt());
        let h = (tol / budget).cbrt().min(x_max);
        let n = ((x_max / h).ceil() as usize).max(4);
        const MAX_INTERVALS: usize = 1 << 22;
        if n > MAX_INTERVALS {
            return Err(Error::ToleranceNotReached {
                requested: tol,
                achieved: budget * (x_max / MAX_INTERVALS as f64).powi(3),
            });
        }
        let mut nodes = Vec::with_capacity(n + 1);
        for i in 0..=n {
            nodes.push(x_max * i as f64 / n as f64);
        }
        *nodes.last_mut().unwrap() = x_max;

        let mut prefix_value = Vec::with_capacity(n + 1);
        let mut prefix_err = Vec::with_capacity(n + 1);
        prefix_value.push(0.0);
        prefix_err.push(0.0);
        for i in 0..n {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let (val, err) = quad_piece(p, a, b, b);
            prefix_value.push(prefix_value[i] + val);
            prefix_err.push(prefix_err[i] + err);
        }
        let total_err = *prefix_err.last().unwrap();
        if total_err > tol {
            return Err(Error::ToleranceNotReached {
                requested: tol,
                achieved: total_err,
            });
        }
        Ok(ExpPowerIntegral {
            p,
            nodes,
            prefix_value,
            prefix_err,
        })
    }

    pub fn x_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `(value, err)` with `|value − G(x)| ≤ err`; requires `0 ≤ x ≤ x_max`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.x_max() * (1.0 + 1e-14) + f64::MIN_POSITIVE).contains(&x) {
            return Err(Error::Incompatible {
                context: format!("G evaluated at x = {x} outside [0, {}]", self.x_max()),
            });
        }
        let x = x.min(self.x_max());
        if x == 0.0 {
            return Ok((0.0, 0.0));
        }
        // Find the interval containing x.
        let i = match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&x).expect("finite nodes"))
        {
            Ok(i) => return Ok((self.prefix_value[i], self.prefix_err[i])),
            Err(i) => i - 1,
        };
        let (a, b) = (self.nodes[i], self.nodes[i + 1]);
        let (val, err) = quad_piece(self.p, a, b, x);
        Ok((self.prefix_value[i] + val, self.prefix_err[i] + err))
    }

    /// Certified `(G(x_max), err)`.
    pub fn total(&self) -> (f64, f64) {
        (
            *self.prefix_value.last().unwrap(),
            *self.prefix_err.last().unwrap(),
        )
    }
}

/// ∫_a^x τ^{-p} q(τ) dτ for the quadratic interpolant `q` of `e^{2τ}` on
/// `[a, b]` (nodes a, midpoint, b), with the interpolation-error bound taken
/// over the whole interval. `a ≤ x ≤ b`.
fn quad_piece(p: f64, a: f64, b: f64, x: f64) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = ((2.0 * a).exp(), (2.0 * m).exp(), (2.0 * b).exp());
    let c1 = (fm - fa) / (m - a);
    let c2 = ((fb - fm) / (b - m) - c1) / (b - a);
    let m0 = power_moment(p, a, x, 0);
    let m1 = power_moment(p, a, x, 1);
    let m2 = power_moment(p, a, x, 2);
    // q(τ) = fa + c1 (τ-a) + c2 (τ-a)(τ-m)
    let val = fa * m0 + c1 * (m1 - a * m0) + c2 * (m2 - (a + m) * m1 + a * m * m0);
    // |e^{2τ} − q| ≤ 8 e^{2b} H³/(9√3) on [a, b], H = (b-a)/2.
    let h_half = 0.5 * (b - a);
    let fit_err = 8.0 * (2.0 * b).exp() * h_half.powi(3) / (9.0 * 3.0f64.sqrt());
    (val, fit_err * m0)
}

/// The control-inequality kernel `g(τ) = μ_ω(τ) e^{-Bτ}` together with exact
/// product-integration weights for piecewise-linear data.
///
/// On `(0, p]` (with `p = (1+ω)/2`) the kernel is `c_μ τ^{-p} e^{(1-B)τ}`;
/// past `p` it is the plain exponential `e^{-Bτ}`. For `B = 1` — the value
/// used throughout — the weights below are exact integrals of `g` against the
/// interval hat functions; for other `B` the analytic factor `e^{(1-B)τ}` is
/// folded into the linearly interpolated part, which is the same
/// product-integration approximation applied to a smooth factor.
#[derive(Debug, Clone, Copy)]
pub struct ControlKernel {
    b: f64,
    p: f64,
    c_mu: f64,
}

impl ControlKernel {
    pub fn new(sp: SmoothingParams) -> Self {
        let p = (1.0 + sp.omega()) / 2.0;
        ControlKernel {
            b: sp.decay(),
            p,
            c_mu: (p / std::f64::consts::E).powf(p),
        }
    }

    /// Branch point between the singular and exponential regimes.
    pub fn branch(&self) -> f64 {
        self.p
    }

    /// Pointwise kernel value, `τ > 0`.
    pub fn eval(&self, tau: f64) -> f64 {
        debug_assert!(tau > 0.0);
        if tau <= self.p {
            self.c_mu * tau.powf(-self.p) * ((1.0 - self.b) * tau).exp()
        } else {
            (-self.b * tau).exp()
        }
    }

    /// Weights `(w_α, w_β)` with
    /// `∫_α^β g(τ) ℓ(τ) dτ ≈ w_α ℓ(α) + w_β ℓ(β)` exact for linear `ℓ`
    /// (and exactly equal to the integral when `B = 1`).
    pub fn linear_weights(&self, alpha: f64, beta: f64) -> (f64, f64) {
        debug_assert!(0.0 <= alpha && alpha <= beta);
        if beta <= alpha {
            return (0.0, 0.0);
        }
        let mut w = (0.0, 0.0);
        // Basis hat functions on the full interval: ℓ_α(τ) = (β-τ)/(β-α),
        // ℓ_β(τ) = (τ-α)/(β-α).
        let width = beta - alpha;
        let mut add_piece = |lo: f64, hi: f64, singular: bool| {
            if hi <= lo {
                return;
            }
            if singular {
                // ∫ c_μ τ^{-p} φ(τ) dτ with φ interpolated linearly on the
                // piece from its endpoint values.
                let m0 = power_moment(self.p, lo, hi, 0);
                let m1 = power_moment(self.p, lo, hi, 1);
                let piece = hi - lo;
                let efac = |tau: f64| ((1.0 - self.b) * tau).exp();
                // Weight of φ(lo) resp. φ(hi) under exact τ^{-p} integration:
                let g_lo = self.c_mu * (hi * m0 - m1) / piece;
                let g_hi = self.c_mu * (m1 - lo * m0) / piece;
                // φ = e^{(1-B)τ} ℓ; distribute onto ℓ(α), ℓ(β).
                let (la_lo, la_hi) = ((beta - lo) / width, (beta - hi) / width);
                let (lb_lo, lb_hi) = ((lo - alpha) / width, (hi - alpha) / width);
                w.0 += g_lo * efac(lo) * la_lo + g_hi * efac(hi) * la_hi;
                w.1 += g_lo * efac(lo) * lb_lo + g_hi * efac(hi) * lb_hi;
            } else {
                // Exact ∫ e^{-Bτ} (c0 + c1 τ) dτ.
                let b = self.b;
                let e0 = ((-b * lo).exp() - (-b * hi).exp()) / b;
                let e1 = ((b * lo + 1.0) * (-b * lo).exp() - (b * hi + 1.0) * (-b * hi).exp())
                    / (b * b);
                // ℓ_α: c0 = β/(β-α), c1 = -1/(β-α); ℓ_β: c0 = -α/(β-α), c1 = 1/(β-α).
                w.0 += (beta * e0 - e1) / width;
                w.1 += (e1 - alpha * e0) / width;
            }
        };
        if beta <= self.p {
            add_piece(alpha, beta, true);
        } else if alpha >= self.p {
            add_piece(alpha, beta, false);
        } else {
            add_piece(alpha, self.p, true);
            add_piece(self.p, beta, false);
        }
        w
    }

    /// Upper bound for `∫_α^β g(τ) dτ`, used to weigh interpolation-error
    /// allowances. Exact for `B = 1`.
    pub fn mass_upper(&self, alpha: f64, beta: f64) -> f64 {
        if beta <= alpha {
            return 0.0;
        }
        let mut total = 0.0;
        let mut add_piece = |lo: f64, hi: f64, singular: bool| {
            if hi <= lo {
                return;
            }
            if singular {
                let env = ((1.0 - self.b) * lo).exp().max(((1.0 - self.b) * hi).exp());
                total += self.c_mu * env * power_moment(self.p, lo, hi, 0);
            } else {
                total += ((-self.b * lo).exp() - (-self.b * hi).exp()) / self.b;
            }
        };
        if beta <= self.p {
            add_piece(alpha, beta, true);
        } else if alpha >= self.p {
            add_piece(alpha, beta, false);
        } else {
            add_piece(alpha, self.p, true);
            add_piece(self.p, beta, false);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference for ∫_a^b τ^{-p} f(τ) dτ: substitute τ = σ^{1/(1-p)}, which
    /// removes the singularity exactly, then apply composite Simpson.
    fn singular_reference(p: f64, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let q = 1.0 / (1.0 - p);
        let lo = a.powf(1.0 - p);
        let hi = b.powf(1.0 - p);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let g = |sigma: f64| q * f(sigma.powf(q));
        let mut s = g(lo) + g(hi);
        for i in 1..n {
            let sigma = lo + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(sigma);
        }
        s * h / 3.0
    }

    #[test]
    fn power_moments_match_reference() {
        for (p, a, b, j) in [
            (0.85, 0.0, 0.3, 0u32),
            (0.85, 0.1, 0.9, 1),
            (0.6, 0.0, 1.2, 2),
        ] {
            let reference = singular_reference(p, a, b, |t| t.powi(j as i32));
            let exact = power_moment(p, a, b, j);
            assert!(
                (exact - reference).abs() < 1e-8 * exact.abs().max(1.0),
                "p={p} a={a} b={b} j={j}: {exact} vs {reference}"
            );
        }
    }

    #[test]
    fn exp_power_integral_matches_reference_within_bound() {
        let p = 0.85;
        let g = ExpPowerIntegral::build(p, 0.85, 1e-10).unwrap();
        for &x in &[0.05, 0.2149, 0.5, 0.85] {
            let (val, err) = g.eval(x).unwrap();
            let reference = singular_reference(p, 0.0, x, |t| (2.0 * t).exp());
            assert!(
                (val - reference).abs() <= err + 1e-7,
                "x={x}: val={val} ref={reference} err={err}"
            );
            assert!(err <= 1e-10);
        }
    }

    #[test]
    fn exp_power_integral_prefix_is_consistent() {
        let g = ExpPowerIntegral::build(0.7, 1.0, 1e-11).unwrap();
        // G is increasing; prefix evaluation must be monotone and continuous
        // across interval boundaries.
        let mut prev = 0.0;
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let (v, _) = g.eval(x).unwrap();
            assert!(v >= prev - 1e-13);
            prev = v;
        }
    }

    #[test]
    fn unreachable_tolerance_is_reported() {
        let err = ExpPowerIntegral::build(0.85, 0.85, 1e-30).unwrap_err();
        assert!(matches!(err, Error::ToleranceNotReached { .. }));
    }

    #[test]
    fn control_kernel_continuous_at_branch() {
        for omega in [0.55, 0.7, 0.9] {
            let k = ControlKernel::new(SmoothingParams::new(omega).unwrap());
            let p = k.branch();
            let left = k.eval(p * (1.0 - 1e-12));
            let right = k.eval(p * (1.0 + 1e-12));
            assert!((left - right).abs() < 1e-9, "omega={omega}");
        }
    }

    #[test]
    fn linear_weights_integrate_hats_exactly_b1() {
        let k = ControlKernel::new(SmoothingParams::new(0.7).unwrap());
        for &(alpha, beta) in &[(0.0, 0.3), (0.2, 0.8), (0.5, 1.7), (0.9, 2.0), (0.0, 2.5)] {
            let (wa, wb) = k.linear_weights(alpha, beta);
            let width = beta - alpha;
            let ref_a = {
                let f = |t: f64| k.eval(t.max(1e-300)) * (beta - t) / width;
                piecewise_reference(&k, alpha, beta, f)
            };
            let ref_b = {
                let f = |t: f64| k.eval(t.max(1e-300)) * (t - alpha) / width;
                piecewise_reference(&k, alpha, beta, f)
            };
            assert!((wa - ref_a).abs() < 2e-7, "({alpha},{beta}): {wa} vs {ref_a}");
            assert!((wb - ref_b).abs() < 2e-7, "({alpha},{beta}): {wb} vs {ref_b}");
            // Mass upper bound dominates the exact mass.
            assert!(k.mass_upper(alpha, beta) >= (wa + wb) * (1.0 - 1e-12));
        }
    }

    /// Numeric reference for ∫_α^β (integrand) dτ where the integrand may
    /// contain the τ^{-p} singularity at the left end — substitute as in
    /// `singular_reference` on the singular piece, Simpson elsewhere.
    fn piecewise_reference(k: &ControlKernel, alpha: f64, beta: f64, f: impl Fn(f64) -> f64) -> f64 {
        let p = k.branch();
        let mut total = 0.0;
        let lo = alpha;
        let hi = beta.min(p);
        if hi > lo {
            // On the singular piece, f(τ) = τ^{-p} · (smooth); divide it out.
            // Evaluate away from 0 so the two factors cancel instead of
            // producing 0 · ∞ at the endpoint.
            let smooth = |t: f64| {
                let t = t.max(1e-12);
                f(t) * t.powf(p)
            };
            total += singular_reference(p, lo, hi, smooth);
        }
        if beta > p.max(alpha) {
            let lo = p.max(alpha);
            let n = 20_000;
            let h = (beta - lo) / n as f64;
            let mut s = f(lo) + f(beta);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
            }
            total += s * h / 3.0;
        }
        total
    }

    #[test]
    fn linear_weights_fold_general_decay_rates() {
        // B ≠ 1 exercises the φ-folding path; weights must still integrate
        // linear data to second order. Compare on a fine subdivision.
        let k = ControlKernel::new(SmoothingParams::with_decay(0.7, 2.0).unwrap());
        let (alpha, beta) = (0.0, 0.6);
        let n = 400;
        let h = (beta - alpha) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let (a, b) = (alpha + i as f64 * h, alpha + (i + 1) as f64 * h);
            let (wa, wb) = k.linear_weights(a, b);
            // Integrate f ≡ 1.
            acc += wa + wb;
        }
        let reference = piecewise_reference(&k, alpha, beta, |t| k.eval(t.max(1e-300)));
        assert!((acc - reference).abs() < 1e-6, "{acc} vs {reference}");
    }
}
