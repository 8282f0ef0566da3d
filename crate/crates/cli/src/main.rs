//! Batch front door for the certified Navier-Stokes toolkit.
//!
//! Four subcommands cover the pipeline end to end:
//!
//! * `constants` — two-sided bracket for the bilinear constant `K_ω`, upper
//!   bound for the semigroup constant `N_ω`, and the certified smallness
//!   threshold `1/(4 N_ω K_ω)` for global existence.
//! * `kernel` — bracket of the lattice kernel sum `K_ω(k)` for one
//!   wavevector.
//! * `simulate` — integrate the truncated mild formulation from a configured
//!   datum; store the trajectory and print a certificate + envelope summary.
//! * `verify` — run the a-posteriori estimators over a stored trajectory,
//!   solve the control inequality for a certified error radius `R(t)`, and
//!   optionally compare against a higher-resolution reference trajectory.
//!
//! Inputs and outputs are versioned JSON documents; every report embeds the
//! exact parameters it was computed from. Commands are deterministic given
//! their inputs (random data is seeded through configuration).
//!
//! Exit codes: `0` success, `2` invalid input or parameters, `3` a
//! computation that ran but failed to certify or verify.

mod config;
mod reports;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ns_torus::aposteriori::{
    error_estimator, growth_estimator, solve_control_inequality, verify_against_reference,
    verify_control, EstimatorSeries,
};
use ns_torus::certificate::{
    compute_constants, ConstantsCertificate, DEFAULT_A, DEFAULT_GRID_STEP, DEFAULT_LAMBDA,
    DEFAULT_QUAD_TOL,
};
use ns_torus::kernel::{kernel_bracket, KernelQuery};
use ns_torus::solver::{envelope_check, global_certificate, picard_solve, Trajectory};
use ns_torus::{Error as CoreError, LatticePoint, SpaceParams};

use config::SimulateConfig;
use reports::{
    emit, ConstantsReport, EnvelopeSummary, KernelReport, Meta, SimulateSummary, VerifyReport,
};

const EXIT_INVALID: u8 = 2;
const EXIT_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ns-torus",
    version,
    about = "Certified constants, mild-solution integration, and a-posteriori \
             verification for incompressible Navier-Stokes on the torus"
)]
struct Cli {
    /// Cap the worker-thread pool (default: one worker per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the bilinear and semigroup constants and the threshold.
    Constants(ConstantsArgs),
    /// Bracket the kernel sum for one wavevector.
    Kernel(KernelArgs),
    /// Integrate a configured run and store the trajectory.
    Simulate(SimulateArgs),
    /// Certify an error radius for a stored trajectory.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    /// Smoothing exponent ω (solver range: d/2 − 1 < ω < 1).
    #[arg(long, default_value_t = 0.7)]
    omega: f64,
    /// Spatial dimension.
    #[arg(long = "dim", default_value_t = 3)]
    dim: usize,
    /// Symmetry-domain radius for the kernel supremum certificate.
    #[arg(long, default_value_t = DEFAULT_A)]
    a: u32,
    /// Lattice cutoff for the truncated kernel sums.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Grid step for maximizing the semigroup convolution integral.
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    /// Error budget for the singular quadratures behind the semigroup bound.
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
    quad_tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    /// Wavevector components, comma separated (e.g. --k 0,0,1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    k: Vec<i64>,
    /// Kernel exponent ω (kernel range: d/2 − 1 < ω ≤ 1).
    #[arg(long, default_value_t = 0.7)]
    omega: f64,
    /// Spatial dimension.
    #[arg(long = "dim", default_value_t = 3)]
    dim: usize,
    /// Lattice cutoff; must exceed |k|.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run configuration document (see the `config` module docs).
    #[arg(long)]
    config: PathBuf,
    /// Where to write the trajectory document.
    #[arg(long)]
    output: PathBuf,
    /// Reuse a `constants` report for the smallness test instead of
    /// recomputing the certificates (must match the run's d and ω).
    #[arg(long)]
    constants: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trajectory document produced by `simulate`.
    #[arg(long)]
    trajectory: PathBuf,
    /// `constants` report supplying the bilinear bound (must match the
    /// trajectory's d and ω).
    #[arg(long, conflicts_with = "k_upper")]
    constants: Option<PathBuf>,
    /// Upper bound for the bilinear constant, given directly.
    #[arg(long)]
    k_upper: Option<f64>,
    /// Multiplier applied to the marched radius before re-verification.
    #[arg(long, default_value_t = 1.2)]
    safety: f64,
    /// Exponential decay rate budgeted for the error kernel.
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
    /// Quadrature refinement of the verification pass (segment splitting).
    #[arg(long, default_value_t = 2)]
    refine: u32,
    /// Higher-resolution reference trajectory to compare against.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_INVALID);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: configuring the thread pool: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Maps an error chain to the exit-code contract: computations that ran but
/// failed to certify exit 3, everything else (bad parameters, bad files,
/// schema mismatches) exits 2.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::ControlInequalityFailed { .. }
                | CoreError::PicardDiverged { .. }
                | CoreError::ToleranceNotReached { .. } => EXIT_FAILED,
                _ => EXIT_INVALID,
            };
        }
    }
    EXIT_INVALID
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Constants(args) => cmd_constants(args),
        Command::Kernel(args) => cmd_kernel(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_constants(args: ConstantsArgs) -> Result<ExitCode> {
    let params = SpaceParams::new(args.dim, args.omega)?;
    let certificate = compute_constants(
        params,
        args.a,
        args.lambda,
        args.grid_step,
        args.quad_tol,
    )?;
    let report = ConstantsReport {
        meta: Meta::new("constants"),
        certificate,
    };
    emit(&report, args.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_kernel(args: KernelArgs) -> Result<ExitCode> {
    let params = SpaceParams::new(args.dim, args.omega)?;
    let k = LatticePoint::from_coords(&args.k, args.dim)?;
    let query = KernelQuery::new(params, k, args.lambda)?;
    let bracket = kernel_bracket(&query)?;
    let report = KernelReport {
        meta: Meta::new("kernel"),
        d: args.dim,
        omega: args.omega,
        k: args.k,
        bracket,
    };
    emit(&report, args.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

/// Accepts either a bare [`ConstantsCertificate`] or a full `constants`
/// report (the certificate then sits under the `certificate` key).
fn load_constants(path: &Path) -> Result<ConstantsCertificate> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading constants {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing constants {}", path.display()))?;
    let body = value.get("certificate").unwrap_or(&value);
    serde_json::from_value(body.clone())
        .with_context(|| format!("decoding constants certificate {}", path.display()))
}

fn constants_for(params: SpaceParams, path: Option<&Path>) -> Result<ConstantsCertificate> {
    match path {
        Some(p) => {
            let cert = load_constants(p)?;
            if cert.d != params.d() || cert.omega != params.omega() {
                bail!(
                    "constants certificate is for (d, omega) = ({}, {}), run has ({}, {})",
                    cert.d,
                    cert.omega,
                    params.d(),
                    params.omega()
                );
            }
            Ok(cert)
        }
        None => Ok(compute_constants(
            params,
            DEFAULT_A,
            DEFAULT_LAMBDA,
            DEFAULT_GRID_STEP,
            DEFAULT_QUAD_TOL,
        )?),
    }
}

fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading trajectory {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing trajectory {}", path.display()))?;
    Ok(Trajectory::from_json(&value)?)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let cfg = SimulateConfig::load(&args.config)?;
    let u0 = cfg.build_datum()?;
    let constants = constants_for(cfg.solve.params, args.constants.as_deref())?;

    let traj = picard_solve(&u0, &cfg.solve)?;
    let mut text = serde_json::to_string(&traj.to_json()).context("serializing trajectory")?;
    text.push('\n');
    std::fs::write(&args.output, text)
        .with_context(|| format!("writing trajectory {}", args.output.display()))?;

    let certificate =
        global_certificate(traj.initial_state(), constants.k.upper, constants.n.n_upper)?;
    let envelope = if certificate.covered {
        let report = envelope_check(&traj, constants.k.upper, constants.n.n_upper)?;
        Some(EnvelopeSummary {
            min_margin: report.min_margin,
            argmin_time: report.argmin_time,
            first_violation: report.first_violation,
        })
    } else {
        None
    };

    let summary = SimulateSummary {
        meta: Meta::new("simulate"),
        d: cfg.solve.params.d(),
        omega: cfg.solve.params.omega(),
        m: cfg.solve.m,
        t_end: cfg.solve.t_end,
        dt: cfg.solve.dt,
        steps: cfg.solve.n_steps(),
        stored: traj.times.len(),
        h1_initial: traj.h1_norms[0],
        h1_final: *traj.h1_norms.last().expect("trajectory is never empty"),
        picard: traj.picard,
        certificate,
        envelope,
        trajectory: args.output.display().to_string(),
    };
    emit(&summary, None)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let traj = load_trajectory(&args.trajectory)?;
    let params = traj.config.params;
    let k_upper = match (args.k_upper, args.constants.as_deref()) {
        (Some(k), _) => k,
        (None, Some(_)) => constants_for(params, args.constants.as_deref())?.k.upper,
        (None, None) => bail!("one of --constants or --k-upper is required"),
    };

    let growth = growth_estimator(&traj)?;
    let error = error_estimator(&traj)?;
    let series = EstimatorSeries::new(traj.times.clone(), growth, error)?;
    let solved =
        solve_control_inequality(&series, k_upper, params.omega(), args.decay, args.safety)?;
    let verification =
        verify_control(&solved, k_upper, params.omega(), args.decay, args.refine)?;

    let reference = match &args.reference {
        Some(path) => {
            let reference = load_trajectory(path)?;
            Some(verify_against_reference(&traj, &reference, &solved)?)
        }
        None => None,
    };
    let passed = reference
        .as_ref()
        .map_or(true, |cmp| cmp.violations.is_empty());

    let radius = solved.r.clone().expect("solved series carries R");
    let report = VerifyReport {
        meta: Meta::new("verify"),
        d: params.d(),
        omega: params.omega(),
        m: traj.config.m,
        dt: traj.config.dt,
        t_end: traj.config.t_end,
        k_upper,
        decay: args.decay,
        safety: args.safety,
        refine: args.refine,
        times: solved.times.clone(),
        growth: solved.d.clone(),
        error: solved.e.clone(),
        radius,
        verification,
        reference,
        passed,
    };
    emit(&report, args.output.as_deref())?;
    if !passed {
        eprintln!("error: reference comparison found radius violations");
        return Ok(ExitCode::from(EXIT_FAILED));
    }
    Ok(ExitCode::SUCCESS)
}
