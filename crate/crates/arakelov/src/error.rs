//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("generator {0} is not declared in this context")]
    UnknownGenerator(String),
    #[error("unknown mark {0}")]
    UnknownMark(String),
    #[error("expressions belong to different curve contexts")]
    MixedContexts,
    #[error("invalid context: {0}")]
    Context(String),
    #[error("expression has non-integral exponents, degree is undefined")]
    NonIntegralDegree,
    #[error("delta index {0} out of range (expected 0, 1 or 2)")]
    DeltaKindOutOfRange(u8),
    #[error("malformed claim: {0}")]
    MalformedClaim(String),
    #[error("rule set invalid: {0}")]
    RuleSet(String),
    #[error("no 2-form assigned to basis pair {0}")]
    UnassignedBasisPair(String),
    #[error("vector is already expressed in a boundary context")]
    AlreadyBoundary,

    #[error("{msg} at {line}:{col}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier { name: String, line: u32, col: u32 },
    #[error("empty or reversed range {lo}..{hi} at {line}:{col}")]
    InvalidRange {
        lo: i64,
        hi: i64,
        line: u32,
        col: u32,
    },

    #[error("evaluation point is a singularity of the chosen representation")]
    Singularity,
    #[error("truncated product has an exactly vanishing factor at m={0}")]
    ZeroFactor(u32),
    #[error("requested tolerance not met: truncation tail bound {bound:e}")]
    ToleranceNotMet { bound: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not hyperbolic")]
    NonHyperbolic,
    #[error("determinant of generator differs from 1 by more than {0:e}")]
    NotUnimodular(f64),
    #[error("cusp configuration error: {0}")]
    CuspConfig(String),
    #[error("step size underflow in numerical differentiation")]
    StepUnderflow,

    #[error("grid point lies outside the grid")]
    OffGrid,
    #[error("grid fields have mismatched shapes")]
    ShapeMismatch,
    #[error("volume form is not normalized: total mass {0}")]
    MassNotNormalized(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
