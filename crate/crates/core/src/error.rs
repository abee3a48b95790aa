use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("window mismatch: object built on window #{expected} used with window #{found}")]
    WindowMismatch { expected: u64, found: u64 },

    #[error("point index {index} outside window of {len} points")]
    PointOutsideWindow { index: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature failed: {reason} (abs_tol {abs_tol:e}, {evals} evaluations)")]
    Quadrature {
        reason: String,
        abs_tol: f64,
        evals: u64,
    },

    #[error("relation kind `{kind}` unsupported here: {reason}")]
    UnsupportedRelation { kind: &'static str, reason: String },

    #[error("chain has a negative entry at {at}; effectiveness requires a nonnegative 0-chain")]
    NegativeEntry { at: String },

    #[error("entourage is not constant on S: mu(E_s) ranges over [{min}, {max}], tolerance {tol}, worst s = {worst}")]
    NotConstantOnS {
        min: f64,
        max: f64,
        tol: f64,
        worst: String,
    },

    #[error("no finite push-forward constant: target set {witness} has measure zero but positive preimage measure")]
    NoFiniteConstant { witness: String },

    #[error("not a quasi-lattice on this window: point {witness} of the interior is not covered by E0[Lambda]")]
    CoverageGap { witness: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
