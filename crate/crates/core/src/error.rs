use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point (r = {r}, theta = {theta}) lies outside the box")]
    PointOutsideBox { r: f64, theta: f64 },

    #[error("points are not ordered: {0}")]
    OrderViolation(String),

    #[error("area ratio |B(z)|/|B(z~,zeta)| = {ratio} exceeds 2")]
    AreaRatioViolation { ratio: f64 },

    #[error("root finding failed: {0}")]
    RootFindFailure(String),

    #[error("bad parameters: {0}")]
    BadParameters(String),

    #[error("quadrature tolerance not reached (estimate {value}, error {error:e})")]
    ToleranceNotReached { value: f64, error: f64 },

    #[error("sup refinement unstable: relative change {delta:.3} exceeds {limit}")]
    RefinementUnstable { delta: f64, limit: f64 },

    #[error("Hankel tail bound {tail:e} exceeds the admissible fraction of {value:e}")]
    TailBoundExceeded { tail: f64, value: f64 },

    #[error("curve passes within {min_modulus:e} of the origin")]
    CurveThroughZero { min_modulus: f64 },

    #[error("curve under-resolved after {samples} samples")]
    UnderResolved { samples: usize },

    #[error("not Fredholm: {0}")]
    NotFredholm(String),

    #[error("index unstable across radii: {0:?}")]
    Unstable(Vec<i64>),

    #[error("eigenvalue iteration did not converge ({converged} of {n} found)")]
    NoConvergence { converged: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid symbol expression: {0}")]
    Parse(String),

    #[error("refusing to regenerate anchors: {0}")]
    RefusesIfChecksRed(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Warning {
    /// Kernel or coefficient mass beyond the truncation.
    Truncation { tail: f64 },
    /// The averaging functional grows across the lattice, so the strong limit
    /// is not covered by the sufficient condition.
    AveragingUnbounded { growth: f64 },
    Precondition(String),
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::Truncation { tail } => write!(f, "truncation tail {tail:e}"),
            Warning::AveragingUnbounded { growth } => write!(f, "averaging functional grows by {growth:.2} across the lattice"),
            Warning::Precondition(s) => write!(f, "precondition: {s}"),
        }
    }
}
