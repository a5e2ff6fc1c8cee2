use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid is not strictly increasing at node {index}")]
    NonMonotoneGrid { index: usize },

    #[error("need at least {needed} nodes, got {got}")]
    TooFewNodes { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("unknown set `{name}`; available: {available}")]
    UnknownSet { name: String, available: String },

    #[error("invalid set specification: {0}")]
    Spec(String),

    #[error("no projection candidate found inside the bounding box")]
    NoProjection,

    #[error("convex body has empty interior and no reduction was supplied")]
    EmptyInterior,

    #[error("F(x̄) is not in D (residual {residual:.3e})")]
    BaseNotFeasible { residual: f64 },

    #[error("constraint qualification fails at the base point")]
    CqFailure,

    #[error("int(D) nonempty; reduction not applicable")]
    ReductionNotApplicable,

    #[error("rank deficiency: smallest singular value {sigma_min:.3e}")]
    RankDeficient { sigma_min: f64 },

    #[error("curve leaves the set at t = {t} (residual {residual:.3e})")]
    Infeasible { t: f64, residual: f64 },

    #[error("point left the domain of the embedding")]
    DomainExit,

    #[error("multivalued projection at {point:?}: {count} separated nearest points")]
    MultivaluedProjection { point: Vec<f64>, count: usize },

    #[error("iteration did not converge: {0}")]
    NonConvergent(String),

    #[error("endpoint {which} is not covered by any member cell")]
    EndpointNotCovered { which: &'static str },

    #[error("only {found} set samples found in the ball (need 10)")]
    TooFewSamples { found: usize },

    #[error("first-order condition holds; no descent direction")]
    NoDescentDirection,

    #[error("descent path construction failed: {0}")]
    DescentFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
