use thiserror::Error;

/// Crate-wide error type.
///
/// Validation failures are deliberately specific: the library refuses to
/// produce a number whenever a precondition needed for a *certified* result is
/// violated, and the error should say which one.
#[derive(Debug, Error)]
pub enum Error {
    /// Spatial dimension outside the supported range `{2, 3}`.
    #[error("unsupported spatial dimension d = {d} (supported: 2 and 3)")]
    UnsupportedDimension { d: usize },

    /// A smoothing/kernel exponent fell outside the range required by the
    /// operation at hand.
    #[error("{name} = {value} out of range ({requirement})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        requirement: String,
    },

    /// A quantity that must be strictly positive (time step, horizon,
    /// truncation radius, ...) was not.
    #[error("{name} must be strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },

    /// A quantity that must be finite was NaN or infinite.
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },

    /// A quantity that must be nonnegative was negative.
    #[error("{name} must be nonnegative, got {value}")]
    Negative { name: &'static str, value: f64 },

    /// Two objects that must share lattice parameters did not.
    #[error("incompatible operands: {context}")]
    Incompatible { context: String },

    /// Malformed lattice data (zero wavevector, wrong component count, ...).
    #[error("invalid lattice point: {context}")]
    InvalidLatticePoint { context: String },

    /// A field violated a structural invariant (reality pairing, cutoff,
    /// divergence flag, duplicate modes, ...).
    #[error("invalid field: {context}")]
    InvalidField { context: String },

    /// Truncation radius too small for the requested query.
    #[error("truncation radius lambda = {lambda} must exceed {minimum} for this query")]
    LambdaTooSmall { lambda: f64, minimum: f64 },

    /// Truncation radius beyond the range with exact shell arithmetic.
    #[error("truncation radius lambda = {lambda} exceeds the supported maximum {maximum}")]
    LambdaTooLarge { lambda: f64, maximum: f64 },

    /// A requested tolerance could not be certified.
    #[error("requested tolerance {requested:e} not reached (achieved {achieved:e})")]
    ToleranceNotReached { requested: f64, achieved: f64 },

    /// The fixed-point iteration inside a solver step failed to contract.
    #[error("Picard iteration failed to converge at t = {t} (last ratio {ratio})")]
    PicardDiverged { t: f64, ratio: f64 },

    /// Division by a vanishing normalization (e.g. a ratio against a zero field).
    #[error("degenerate input: {context}")]
    Degenerate { context: String },

    /// The control inequality admitted no solution, or its verification pass
    /// found a violation. Carries the first failing time and the defect there.
    #[error("control inequality failed at t = {t_star}: defect {defect:e}")]
    ControlInequalityFailed { t_star: f64, defect: f64 },

    /// Structural problems in serialized inputs.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that indicate invalid *input* rather than a failed
    /// certification. Used by front ends to pick exit codes.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::ControlInequalityFailed { .. }
                | Error::PicardDiverged { .. }
                | Error::ToleranceNotReached { .. }
                | Error::Io(_)
        )
    }
}
