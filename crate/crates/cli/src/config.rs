//! Simulation run configuration: the versioned JSON document consumed by
//! `ns-torus simulate`.
//!
//! A run is fully described by the solver configuration plus a datum
//! specification, so one file pins everything needed to reproduce a
//! trajectory bit for bit:
//!
//! ```json
//! {
//!   "version": 1,
//!   "solve": {
//!     "params": { "d": 3, "omega": 0.7 },
//!     "m": 8,
//!     "t_end": 5.0,
//!     "dt": 0.01
//!   },
//!   "datum": { "kind": "seeded", "cutoff": 8, "seed": 7, "h1_norm": 0.3 }
//! }
//! ```
//!
//! Optional solver fields (`picard_tol`, `picard_max_iters`, `store_every`,
//! `prune_rel`, `nonlinear`) take their library defaults when omitted. The
//! datum is one of
//!
//! * `{ "kind": "zero" }` — the zero field;
//! * `{ "kind": "seeded", "cutoff": M₀, "seed": s, "h1_norm": r }` — the
//!   deterministic pseudorandom divergence-free datum of the library
//!   generator, rescaled to `‖u₀‖₁ = r`;
//! * `{ "kind": "file", "path": "datum.json" }` — a stored field document.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ns_torus::solver::SolveConfig;
use ns_torus::FourierVectorField;
use serde::{Deserialize, Serialize};

/// Current schema version of [`SimulateConfig`] documents.
pub const SIMULATE_CONFIG_VERSION: u32 = 1;

/// Initial datum specification for a simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatumSpec {
    /// The zero field (the trajectory stays identically zero).
    Zero,
    /// Deterministic pseudorandom divergence-free field: a pure function of
    /// `(cutoff, seed)`, rescaled to the requested `H¹` norm.
    Seeded { cutoff: u32, seed: u64, h1_norm: f64 },
    /// A field document on disk, validated on load.
    File { path: PathBuf },
}

/// Top-level simulation configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub version: u32,
    pub solve: SolveConfig,
    pub datum: DatumSpec,
}

impl SimulateConfig {
    /// Loads and validates a configuration document.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading configuration {}", path.display()))?;
        let cfg: SimulateConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing configuration {}", path.display()))?;
        if cfg.version != SIMULATE_CONFIG_VERSION {
            bail!(
                "unsupported configuration version {} (expected {SIMULATE_CONFIG_VERSION})",
                cfg.version
            );
        }
        cfg.solve.validate().context("invalid `solve` section")?;
        cfg.validate_datum().context("invalid `datum` section")?;
        Ok(cfg)
    }

    fn validate_datum(&self) -> Result<()> {
        match &self.datum {
            DatumSpec::Zero | DatumSpec::File { .. } => Ok(()),
            DatumSpec::Seeded { cutoff, h1_norm, .. } => {
                if *cutoff == 0 {
                    bail!("seeded datum requires cutoff >= 1");
                }
                if !(*h1_norm >= 0.0) || !h1_norm.is_finite() {
                    bail!("seeded datum requires a finite h1_norm >= 0, got {h1_norm}");
                }
                Ok(())
            }
        }
    }

    /// Materializes the initial datum. File data must agree with the solver's
    /// `(d, ω)`; a cutoff mismatch is fine (the solver projects to its ball).
    pub fn build_datum(&self) -> Result<FourierVectorField> {
        let params = self.solve.params;
        match &self.datum {
            DatumSpec::Zero => Ok(FourierVectorField::zero(params, self.solve.m)),
            DatumSpec::Seeded {
                cutoff,
                seed,
                h1_norm,
            } => Ok(FourierVectorField::random(params, *cutoff, *seed, *h1_norm)?),
            DatumSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading datum {}", path.display()))?;
                let value: serde_json::Value = serde_json::from_str(&text)
                    .with_context(|| format!("parsing datum {}", path.display()))?;
                let field = FourierVectorField::from_json(&value)?;
                if field.params() != params {
                    bail!(
                        "datum (d, omega) = ({}, {}) disagrees with the solve section ({}, {})",
                        field.params().d(),
                        field.params().omega(),
                        params.d(),
                        params.omega()
                    );
                }
                Ok(field)
            }
        }
    }
}
