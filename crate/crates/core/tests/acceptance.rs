//! Acceptance gate for the library: every numbered criterion prints exactly
//! one `PASS`/`FAIL` line with a measured detail and its wall time, and the
//! process exits nonzero if any criterion fails.
//!
//! The gate covers, in order: the pinned kernel brackets at the reference
//! parameters, the supremum enclosure with its boundary branch, the certified
//! constants `K_ω`, `N_ω` and the smallness threshold, the displayed prior
//! threshold, four randomized invariant families (convolution structure,
//! bilinear quotients, smoothing defects, projection/curl identities), the
//! standard seeded run against its decay envelope, and the a-posteriori
//! radius validated against a finer independent reference run.
//!
//! Later criteria reuse earlier artifacts — the constants certificate is
//! computed once (timed under criterion 3) and the criterion-6 trajectory is
//! the input to criterion 7 — so the printed times add up to the real cost.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use ns_torus::aposteriori::{
    error_estimator, growth_estimator, solve_control_inequality, verify_against_reference,
    verify_control, EstimatorSeries,
};
use ns_torus::certificate::{
    compute_constants, ConstantsCertificate, DEFAULT_A, DEFAULT_GRID_STEP, DEFAULT_LAMBDA,
    DEFAULT_QUAD_TOL, PRIOR_THRESHOLD,
};
use ns_torus::kernel::kernel_brackets;
use ns_torus::nonlinearity::bilinear_ratio;
use ns_torus::semigroup::smoothing_defect;
use ns_torus::solver::{energy_law_defects, envelope_check, picard_solve, SolveConfig, Trajectory};
use ns_torus::unimodal::{
    check_even_unimodal, check_symmetric, convolve_1d, convolve_grid, random_even_unimodal_grid,
    random_even_unimodal_sequence,
};
use ns_torus::{FourierVectorField, LatticePoint, SpaceParams};

/// Tolerance on each pinned kernel-bracket endpoint (two-decimal pins).
const KERNEL_ENDPOINT_TOL: f64 = 0.02;
/// Tolerance on the pinned endpoints of the bilinear-constant bracket.
const CONSTANT_TOL: f64 = 0.002;
/// Relative tolerance for the exact field identities of criterion 5d.
const IDENTITY_REL_TOL: f64 = 1e-10;

/// The reference space: `d = 3`, `ω = 7/10`.
fn reference_params() -> SpaceParams {
    SpaceParams::new(3, 0.7).expect("d = 3, omega = 0.7 is a valid space")
}

#[derive(Default)]
struct Gate {
    passed: u32,
    failed: u32,
}

impl Gate {
    /// Prints the single line for one criterion; a blown time budget demotes
    /// an otherwise passing outcome to FAIL without masking real errors.
    fn report(
        &mut self,
        label: &str,
        what: &str,
        outcome: Result<String, String>,
        secs: f64,
        budget: Option<f64>,
    ) {
        let outcome = match (outcome, budget) {
            (Ok(detail), Some(b)) if secs > b => Err(format!(
                "{detail}; runtime {secs:.1} s exceeded the {b:.0} s budget"
            )),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => {
                self.passed += 1;
                println!("criterion {label} — {what}: PASS ({detail}; {secs:.1} s)");
            }
            Err(detail) => {
                self.failed += 1;
                println!("criterion {label} — {what}: FAIL ({detail}; {secs:.1} s)");
            }
        }
    }
}

fn main() -> ExitCode {
    let params = reference_params();
    let mut gate = Gate::default();

    let t = Instant::now();
    let r = criterion_kernel_brackets(params);
    gate.report(
        "1",
        "pointwise kernel brackets at λ = 150",
        r,
        t.elapsed().as_secs_f64(),
        Some(120.0),
    );

    // One constants certificate serves criteria 2-4, 6 and 7; its cost is
    // accounted to criterion 3, which pins the values it certifies.
    let t = Instant::now();
    let constants: Result<ConstantsCertificate, String> = compute_constants(
        params,
        DEFAULT_A,
        DEFAULT_LAMBDA,
        DEFAULT_GRID_STEP,
        DEFAULT_QUAD_TOL,
    )
    .map_err(|e| e.to_string());
    let constants_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let r = criterion_sup_enclosure(&constants);
    gate.report(
        "2",
        "kernel supremum enclosure and boundary branch",
        r,
        t.elapsed().as_secs_f64(),
        None,
    );

    let r = criterion_headline_constants(&constants);
    gate.report(
        "3",
        "certified constants and the smallness threshold",
        r,
        constants_secs,
        Some(60.0),
    );

    let t = Instant::now();
    let r = criterion_prior_constant(&constants);
    gate.report(
        "4",
        "prior threshold displayed, not recomputed",
        r,
        t.elapsed().as_secs_f64(),
        None,
    );

    let t = Instant::now();
    let r = criterion_unimodal_closure();
    gate.report(
        "5a",
        "convolution preserves even/unimodal structure",
        r,
        t.elapsed().as_secs_f64(),
        None,
    );

    let t = Instant::now();
    let r = criterion_bilinear_quotients(params);
    gate.report(
        "5b",
        "sampled bilinear quotients below the certified constant",
        r,
        t.elapsed().as_secs_f64(),
        None,
    );

    let t = Instant::now();
    let r = criterion_smoothing_defects();
    gate.report(
        "5c",
        "semigroup smoothing estimate never undercuts the norm",
        r,
        t.elapsed().as_secs_f64(),
        None,
    );

    let t = Instant::now();
    let r = criterion_field_identities();
    gate.report(
        "5d",
        "Parseval, projection and curl identities",
        r,
        t.elapsed().as_secs_f64(),
        None,
    );

    let t = Instant::now();
    let (r, standard_run) = criterion_standard_run(params, &constants);
    gate.report(
        "6",
        "standard seeded run obeys the decay envelope",
        r,
        t.elapsed().as_secs_f64(),
        Some(300.0),
    );

    let t = Instant::now();
    let r = match &standard_run {
        Some(traj) => criterion_reference_control(traj, &constants),
        None => Err("standard run unavailable".to_string()),
    };
    gate.report(
        "7",
        "a-posteriori radius validated against a finer reference",
        r,
        t.elapsed().as_secs_f64(),
        Some(900.0),
    );

    println!(
        "acceptance gate: {} passed, {} failed",
        gate.passed, gate.failed
    );
    if gate.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Criterion 1: the four kernel brackets at the reference parameters match
/// their pinned endpoints to ±0.02.
fn criterion_kernel_brackets(params: SpaceParams) -> Result<String, String> {
    let pinned: [(LatticePoint, f64, f64); 4] = [
        (LatticePoint::new3(0, 0, 1), 27.94, 32.23),
        (LatticePoint::new3(0, 1, 1), 27.48, 31.77),
        (LatticePoint::new3(1, 1, 1), 26.49, 30.78),
        (LatticePoint::new3(0, 0, 2), 25.69, 29.98),
    ];
    let ks: Vec<LatticePoint> = pinned.iter().map(|(k, _, _)| *k).collect();
    let brackets = kernel_brackets(params, &ks, 150.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for ((k, lo, hi), b) in pinned.iter().zip(&brackets) {
        if !(b.lower < b.upper) {
            return Err(format!("inverted bracket at k = {:?}", k.coords()));
        }
        let dev = (b.lower - lo).abs().max((b.upper - hi).abs());
        worst = worst.max(dev);
        if dev > KERNEL_ENDPOINT_TOL {
            return Err(format!(
                "k = {:?}: bracket ({:.4}, {:.4}) deviates {dev:.4} from pinned ({lo}, {hi})",
                k.coords(),
                b.lower,
                b.upper
            ));
        }
    }
    Ok(format!(
        "4 brackets within ±{KERNEL_ENDPOINT_TOL} of their pins, worst deviation {worst:.4}"
    ))
}

/// Criterion 2: the supremum enclosure sits inside the pinned interval and
/// the far-field boundary branch stays below its pinned majorant, both to
/// the same ±0.02 endpoint tolerance. Reads the shared certificate.
fn criterion_sup_enclosure(
    constants: &Result<ConstantsCertificate, String>,
) -> Result<String, String> {
    let c = constants.as_ref().map_err(Clone::clone)?;
    let cert = &c.k.certificate;
    if cert.sup_lower < 27.94 - KERNEL_ENDPOINT_TOL {
        return Err(format!("sup lower bound {:.4} below 27.92", cert.sup_lower));
    }
    if cert.sup_upper > 32.23 + KERNEL_ENDPOINT_TOL {
        return Err(format!("sup upper bound {:.4} above 32.25", cert.sup_upper));
    }
    if !(cert.boundary_term < 30.61 + KERNEL_ENDPOINT_TOL) {
        return Err(format!(
            "boundary branch {:.4} not below 30.63",
            cert.boundary_term
        ));
    }
    Ok(format!(
        "sup enclosed in ({:.4}, {:.4}), boundary branch {:.4} < 30.63",
        cert.sup_lower, cert.sup_upper, cert.boundary_term
    ))
}

/// Criterion 3: the bilinear-constant bracket matches its pinned endpoints
/// to ±0.002, the semigroup constant and its interior argmax are localized,
/// and the combined smallness threshold clears 0.407.
fn criterion_headline_constants(
    constants: &Result<ConstantsCertificate, String>,
) -> Result<String, String> {
    let c = constants.as_ref().map_err(Clone::clone)?;
    if (c.k.lower - 0.335).abs() > CONSTANT_TOL || (c.k.upper - 0.361).abs() > CONSTANT_TOL {
        return Err(format!(
            "K bracket ({:.5}, {:.5}) deviates more than ±{CONSTANT_TOL} from (0.335, 0.361)",
            c.k.lower, c.k.upper
        ));
    }
    if !(c.n.n_upper <= 1.70) {
        return Err(format!("N upper bound {:.5} exceeds 1.70", c.n.n_upper));
    }
    let (a_lo, a_hi) = c.n.argmax_window;
    if !(a_lo > 0.20 && a_hi < 0.23) {
        return Err(format!(
            "N argmax window ({a_lo:.4}, {a_hi:.4}) escapes (0.20, 0.23)"
        ));
    }
    if !(c.threshold_lower >= 0.407) {
        return Err(format!(
            "certified threshold {:.5} below 0.407",
            c.threshold_lower
        ));
    }
    Ok(format!(
        "K ∈ ({:.5}, {:.5}), N ≤ {:.5}, argmax ⊂ ({a_lo:.4}, {a_hi:.4}), threshold ≥ {:.5}",
        c.k.lower, c.k.upper, c.n.n_upper, c.threshold_lower
    ))
}

/// Criterion 4: the previously published threshold is carried verbatim as a
/// display constant — bitwise equal to the library constant, never the
/// output of any computation here.
fn criterion_prior_constant(
    constants: &Result<ConstantsCertificate, String>,
) -> Result<String, String> {
    let c = constants.as_ref().map_err(Clone::clone)?;
    #[allow(clippy::float_cmp)]
    if c.prior_threshold != PRIOR_THRESHOLD || PRIOR_THRESHOLD != 0.00724 {
        return Err(format!(
            "prior constant drifted: certificate carries {}, library constant {}",
            c.prior_threshold, PRIOR_THRESHOLD
        ));
    }
    Ok(format!(
        "prior 0.00724 carried verbatim; certified radius is {:.0}× larger",
        c.threshold_lower / c.prior_threshold
    ))
}

/// Criterion 5a: convolution of even/unimodal data stays even/unimodal —
/// 100 one-dimensional pairs plus 100 grid pairs in d = 2, 3 (coordinatewise
/// structure, with symmetric variants checked for symmetry too).
fn criterion_unimodal_closure() -> Result<String, String> {
    let mut checked = 0usize;
    for seed in 0..100u64 {
        let p = random_even_unimodal_sequence(2 * seed, 3 + (seed % 14) as u32);
        let q = random_even_unimodal_sequence(2 * seed + 1, 3 + (seed % 11) as u32);
        let c = convolve_1d(&p, &q).map_err(|e| e.to_string())?;
        if !c.is_even() || !c.is_unimodal() {
            return Err(format!(
                "1-D convolution lost the even/unimodal structure at seed {seed}"
            ));
        }
        checked += 1;
    }
    for seed in 0..50u64 {
        for d in [2usize, 3] {
            let m = 2 + (seed % 3) as u32;
            let symmetric = seed % 2 == 0;
            let p = random_even_unimodal_grid(1000 + 4 * seed + d as u64, d, m, symmetric)
                .map_err(|e| e.to_string())?;
            let q = random_even_unimodal_grid(3000 + 4 * seed + d as u64, d, m, symmetric)
                .map_err(|e| e.to_string())?;
            let c = convolve_grid(&p, &q).map_err(|e| e.to_string())?;
            if !check_even_unimodal(&c) {
                return Err(format!(
                    "d = {d} convolution lost coordinatewise unimodality at seed {seed}"
                ));
            }
            if symmetric && !check_symmetric(&c) {
                return Err(format!(
                    "d = {d} convolution lost permutation symmetry at seed {seed}"
                ));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} convolution cases kept their structure, zero violations"
    ))
}

/// Criterion 5b: 1000 random divergence-free pairs never exceed the
/// certified bilinear constant's pinned upper endpoint.
fn criterion_bilinear_quotients(params: SpaceParams) -> Result<String, String> {
    let mut max_ratio = 0.0f64;
    for i in 0..1000u64 {
        let v = FourierVectorField::random(params, 4, i, 1.0).map_err(|e| e.to_string())?;
        let w =
            FourierVectorField::random(params, 4, 10_000 + i, 1.0).map_err(|e| e.to_string())?;
        let r = bilinear_ratio(&v, &w).map_err(|e| e.to_string())?;
        if !(r <= 0.361) {
            return Err(format!("pair {i}: bilinear quotient {r:.5} exceeds 0.361"));
        }
        max_ratio = max_ratio.max(r);
    }
    Ok(format!(
        "1000 pairs, max quotient {max_ratio:.4} ≤ 0.361, zero violations"
    ))
}

/// Criterion 5c: 10⁴ sampled `(v, t, n, ν)` combinations; the smoothing
/// majorant minus the exact propagated norm is never below −10⁻¹².
fn criterion_smoothing_defects() -> Result<String, String> {
    let ts: Vec<f64> = (0..20)
        .map(|j| 1e-3 * 5000.0f64.powf(j as f64 / 19.0))
        .collect();
    let nus = [0.1, 0.5, 0.9, 1.4, 1.9];
    let ns = [-1.0, 0.0, 0.7, 1.5];
    let mut min_defect = f64::INFINITY;
    let mut samples = 0usize;
    for fi in 0..25u64 {
        let d = if fi % 2 == 0 { 3 } else { 2 };
        let params = SpaceParams::new(d, 0.7).map_err(|e| e.to_string())?;
        let cutoff = 2 + (fi % 3) as u32;
        let norm = 0.2 + 0.4 * (fi % 5) as f64;
        let v = FourierVectorField::random(params, cutoff, 500 + fi, norm)
            .map_err(|e| e.to_string())?;
        for &t in &ts {
            for &nu in &nus {
                for &n in &ns {
                    let defect = smoothing_defect(&v, t, n, nu).map_err(|e| e.to_string())?;
                    if defect < -1e-12 {
                        return Err(format!(
                            "field {fi}, t = {t:.4}, n = {n}, ν = {nu}: defect {defect:e}"
                        ));
                    }
                    min_defect = min_defect.min(defect);
                    samples += 1;
                }
            }
        }
    }
    Ok(format!(
        "{samples} samples, min defect {min_defect:+.2e} ≥ -1e-12"
    ))
}

/// A generally non-solenoidal field: a divergence-free part plus the
/// gradient field `k ↦ i k z_k` built from a conjugate-symmetric scalar
/// (the first component of a second random field).
fn with_gradient_part(u: &FourierVectorField, w: &FourierVectorField) -> FourierVectorField {
    let i = Complex64::new(0.0, 1.0);
    let mut modes: BTreeMap<_, _> = u.modes().map(|(k, c)| (*k, *c)).collect();
    for (k, c) in w.modes() {
        let kc = k.coords();
        let z = c[0];
        let e = modes.entry(*k).or_insert([Complex64::new(0.0, 0.0); 3]);
        for j in 0..3 {
            e[j] += i * (kc[j] as f64 * z);
        }
    }
    FourierVectorField::from_modes(u.params(), u.cutoff().max(w.cutoff()), false, modes)
        .expect("sum of two valid mode sets is a valid field")
}

/// Criterion 5d: 10³ seeded fields satisfy the Parseval split under the
/// Leray projection, projection idempotence and contraction, and (d = 3)
/// the curl/`H¹` norm identity, all to 10⁻¹⁰ relative.
fn criterion_field_identities() -> Result<String, String> {
    let mut fields = 0usize;
    for seed in 0..500u64 {
        for d in [2usize, 3] {
            let params = SpaceParams::new(d, 0.7).map_err(|e| e.to_string())?;
            let cutoff = 2 + (seed % 3) as u32;
            let norm = 0.1 + 0.3 * (seed % 7) as f64;
            let u = FourierVectorField::random(params, cutoff, seed, norm)
                .map_err(|e| e.to_string())?;
            let w = FourierVectorField::random(params, cutoff, seed + 7777, 0.5)
                .map_err(|e| e.to_string())?;
            let f = with_gradient_part(&u, &w);

            let sol = f.leray_project();
            let grad = f.sub(&sol).map_err(|e| e.to_string())?;
            let total = f.l2_norm().powi(2);
            let split = sol.l2_norm().powi(2) + grad.l2_norm().powi(2);
            if (total - split).abs() > IDENTITY_REL_TOL * total.max(1e-300) {
                return Err(format!(
                    "seed {seed}, d = {d}: Parseval split {split:e} vs {total:e}"
                ));
            }

            let twice = sol.leray_project();
            let drift = twice.sub(&sol).map_err(|e| e.to_string())?.l2_norm();
            if drift > IDENTITY_REL_TOL * sol.l2_norm().max(1e-300) {
                return Err(format!("seed {seed}, d = {d}: projection drift {drift:e}"));
            }
            if sol.l2_norm() > f.l2_norm() * (1.0 + 1e-12) {
                return Err(format!("seed {seed}, d = {d}: projection expanded the norm"));
            }
            if !sol.is_divergence_free() {
                return Err(format!("seed {seed}, d = {d}: projection left divergence"));
            }

            if d == 3 {
                let rot = u.curl().map_err(|e| e.to_string())?.l2_norm();
                let h1 = u.sobolev_norm(1.0);
                if (rot - h1).abs() > IDENTITY_REL_TOL * h1.max(1e-300) {
                    return Err(format!(
                        "seed {seed}: curl norm {rot:.12e} vs H¹ norm {h1:.12e}"
                    ));
                }
            }
            fields += 1;
        }
    }
    Ok(format!(
        "{fields} fields satisfy all identities to 1e-10 relative"
    ))
}

/// Criterion 6: the standard seeded run (`d = 3`, `M = 8`, `‖u₀‖₁ = 0.3`,
/// `T = 5`, `dt = 0.01`) stays below its certified decay envelope with
/// margin ≥ −10⁻³‖u₀‖₁, and the discrete energy law holds to `dt²` per
/// step. The trajectory is handed to criterion 7.
fn criterion_standard_run(
    params: SpaceParams,
    constants: &Result<ConstantsCertificate, String>,
) -> (Result<String, String>, Option<Trajectory>) {
    let datum = match FourierVectorField::random(params, 8, 2026, 0.3) {
        Ok(v) => v,
        Err(e) => return (Err(e.to_string()), None),
    };
    let cfg = match SolveConfig::new(params, 8, 5.0, 0.01) {
        Ok(c) => c,
        Err(e) => return (Err(e.to_string()), None),
    };
    let traj = match picard_solve(&datum, &cfg) {
        Ok(t) => t,
        Err(e) => return (Err(e.to_string()), None),
    };

    let outcome = (|| {
        let c = constants.as_ref().map_err(Clone::clone)?;
        let report = envelope_check(&traj, c.k.upper, c.n.n_upper).map_err(|e| e.to_string())?;
        let floor = -1e-3 * 0.3;
        if report.min_margin < floor {
            return Err(format!(
                "envelope margin {:+.3e} below {floor:.0e} at t = {:.2}",
                report.min_margin, report.argmin_time
            ));
        }
        let defects = energy_law_defects(&traj);
        let worst = defects.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let dt2 = cfg.dt * cfg.dt;
        if worst > dt2 {
            return Err(format!(
                "energy-law defect {worst:.3e} exceeds dt² = {dt2:.0e}"
            ));
        }
        Ok(format!(
            "min envelope margin {:+.2e} (floor {floor:.0e}) at t = {:.2}, \
             max energy defect {worst:.1e} ≤ dt² = {dt2:.0e}",
            report.min_margin, report.argmin_time
        ))
    })();
    (outcome, Some(traj))
}

/// Criterion 7: the a-posteriori radius solved from the standard run's
/// estimators survives refined re-verification and dominates the true
/// distance to an independent finer solve (`M = 16`, `dt = 0.005`) at every
/// shared sample time.
fn criterion_reference_control(
    traj: &Trajectory,
    constants: &Result<ConstantsCertificate, String>,
) -> Result<String, String> {
    let c = constants.as_ref().map_err(Clone::clone)?;
    let d = growth_estimator(traj).map_err(|e| e.to_string())?;
    let e = error_estimator(traj).map_err(|e| e.to_string())?;
    let series = EstimatorSeries::new(traj.times.clone(), d, e).map_err(|e| e.to_string())?;
    let solved =
        solve_control_inequality(&series, c.k.upper, c.omega, 1.0, 1.2).map_err(|e| e.to_string())?;
    let r = solved
        .r
        .as_ref()
        .ok_or_else(|| "solver returned no radius samples".to_string())?;
    if r.len() != traj.times.len() {
        return Err(format!(
            "radius has {} samples for {} times",
            r.len(),
            traj.times.len()
        ));
    }
    let check = verify_control(&solved, c.k.upper, c.omega, 1.0, 2).map_err(|e| e.to_string())?;

    let mut ref_cfg =
        SolveConfig::new(traj.config.params, 16, 5.0, 0.005).map_err(|e| e.to_string())?;
    ref_cfg.store_every = 10;
    let reference = picard_solve(traj.initial_state(), &ref_cfg).map_err(|e| e.to_string())?;
    let cmp = verify_against_reference(traj, &reference, &solved).map_err(|e| e.to_string())?;
    if !cmp.violations.is_empty() {
        return Err(format!(
            "{} violations against the reference, min margin {:+.3e}",
            cmp.violations.len(),
            cmp.min_margin
        ));
    }
    let max_err = cmp.errors.iter().fold(0.0f64, |m, &x| m.max(x));
    Ok(format!(
        "R(5) = {:.2e}, refined control margin {:+.1e}; {} shared times, \
         zero violations, max true error {:.1e}",
        r.last().copied().unwrap_or(f64::NAN),
        check.min_margin,
        cmp.times.len(),
        max_err
    ))
}
