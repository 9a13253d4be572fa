use thiserror::Error;

/// Errors raised by the library. Variants are grouped by the exit-code class
/// the CLI maps them to (see [`Error::exit_code`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("degenerate gradient |grad S| = {0:e}")]
    DegenerateGradient(f64),
    #[error("point is off the surface (distance {0:e})")]
    OffSurface(f64),
    #[error("extension not evaluable on the stencil: {0}")]
    Stencil(String),
    #[error("empty quadrature")]
    EmptyQuadrature,
    #[error("test function support touches the box boundary: {0}")]
    SupportViolation(String),
    #[error("unsupported front: {0}")]
    UnsupportedFront(String),

    #[error("no entropy-admissible delta shock: {0}")]
    NoDeltaShock(String),
    #[error("ambiguous delta-shock speed: roots {0} and {1} both admissible")]
    AmbiguousRoot(f64, f64),

    #[error("free-flow characteristics cross (caustic) at r = {0}")]
    Caustic(f64),
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("too few particles: {0}")]
    Undersampled(String),
    #[error("event queue inconsistency: {0}")]
    EventQueue(String),
    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("invalid test-function battery: {0}")]
    InvalidBattery(String),
    #[error("audit invalid: {0}")]
    AuditInvalid(String),

    #[error("expression: {0}")]
    Expression(String),
    #[error("scenario: {0}")]
    Schema(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code class: 2 for malformed input, 3 for numerical failure.
    /// Theorem-check failures are not errors and are reported separately (exit 4).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_) | Error::Expression(_) | Error::Io(_) => 2,
            Error::InvalidDimension(_)
            | Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::InvalidBattery(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
