//! Machine-readable report envelopes.
//!
//! Every command emits one JSON document that embeds, next to its results,
//! the exact parameter set it was computed from (a reproducibility header),
//! so a report alone suffices to re-run the computation. Reports contain no
//! timestamps or host data: a command is a pure function of its inputs.

use std::path::Path;

use anyhow::{Context, Result};
use ns_torus::aposteriori::{ControlVerification, ReferenceComparison};
use ns_torus::certificate::ConstantsCertificate;
use ns_torus::kernel::KernelBracket;
use ns_torus::solver::{GlobalCertificate, PicardStats};
use serde::Serialize;

/// Reproducibility header shared by all reports.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    /// Report schema version.
    pub version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    /// The subcommand that produced the report.
    pub command: &'static str,
    /// Full argument vector of the invocation.
    pub argv: Vec<String>,
}

/// Current schema version of all CLI reports.
pub const REPORT_VERSION: u32 = 1;

impl Meta {
    pub fn new(command: &'static str) -> Self {
        Meta {
            version: REPORT_VERSION,
            tool: "ns-torus",
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().collect(),
        }
    }
}

/// Output of `ns-torus constants`.
#[derive(Debug, Serialize)]
pub struct ConstantsReport {
    pub meta: Meta,
    pub certificate: ConstantsCertificate,
}

/// Output of `ns-torus kernel`.
#[derive(Debug, Serialize)]
pub struct KernelReport {
    pub meta: Meta,
    pub d: usize,
    pub omega: f64,
    pub k: Vec<i64>,
    pub bracket: KernelBracket,
}

/// Envelope digest embedded in the simulation summary (the full per-sample
/// margins live in the trajectory consumer's hands; the digest keeps the
/// summary small).
#[derive(Debug, Serialize)]
pub struct EnvelopeSummary {
    pub min_margin: f64,
    pub argmin_time: f64,
    pub first_violation: Option<f64>,
}

/// Output of `ns-torus simulate` (printed to stdout; the trajectory itself
/// goes to the `--output` file).
#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub meta: Meta,
    pub d: usize,
    pub omega: f64,
    pub m: u32,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub stored: usize,
    pub h1_initial: f64,
    pub h1_final: f64,
    pub picard: PicardStats,
    /// Smallness test of the datum against the certified constants.
    pub certificate: GlobalCertificate,
    /// Decay-envelope margins; absent when the datum is not covered.
    pub envelope: Option<EnvelopeSummary>,
    /// Where the trajectory document was written.
    pub trajectory: String,
}

/// Output of `ns-torus verify`.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub meta: Meta,
    pub d: usize,
    pub omega: f64,
    pub m: u32,
    pub dt: f64,
    pub t_end: f64,
    pub k_upper: f64,
    pub decay: f64,
    pub safety: f64,
    pub refine: u32,
    pub times: Vec<f64>,
    /// Growth estimator samples `𝒟(tᵢ)`.
    pub growth: Vec<f64>,
    /// Error estimator samples `ℰ(tᵢ)`.
    pub error: Vec<f64>,
    /// Certified radius samples `R(tᵢ)`.
    pub radius: Vec<f64>,
    pub verification: ControlVerification,
    pub reference: Option<ReferenceComparison>,
    /// True when the inequality verifies and the reference comparison (if
    /// any) reports no violations.
    pub passed: bool,
}

/// Serializes a report as pretty JSON, to `path` when given, else to stdout.
pub fn emit<T: Serialize>(report: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).context("serializing report")?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
