//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not agree with the declared `p`.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter set violates the feasible-set constraints.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A configuration or graph specification is self-contradictory.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// `p` exceeds what the requested operation can afford.
    #[error("p = {p} exceeds the limit {max} for {what}")]
    TooLarge { p: usize, max: usize, what: &'static str },

    /// A trajectory with zero steps carries no transitions.
    #[error("trajectory has no transitions")]
    NoTransitions,

    /// Closed-form estimation requires a visit to the all-zeros state.
    #[error("closed-form estimation requires a visit to the all-zeros state")]
    ZerosStateUnvisited,

    /// The design matrix does not have full column rank.
    #[error("design matrix is rank deficient: rank {rank} < p = {p}")]
    RankDeficient { rank: usize, p: usize },

    /// A success probability left `(0, 1)` where the likelihood is defined.
    #[error("success probability {value} for node {node} at state {state} is outside (0, 1)")]
    ProbOutOfRange { node: usize, state: u64, value: f64 },

    /// Division by a vanishing noise weight during reparameterization.
    #[error("noise weight b[{node}] vanishes; rho_w is undefined")]
    VanishingNoiseWeight { node: usize },

    /// KL divergence is infinite because the support condition fails.
    #[error("KL divergence is infinite: q[{index}] > 0 but p[{index}] = 0")]
    InfiniteDivergence { index: usize },

    /// Two independent stationary-distribution solvers disagree.
    #[error("stationary distribution methods disagree by {gap:e} (tolerance {tol:e})")]
    StationaryMismatch { gap: f64, tol: f64 },

    /// An iterative routine hit its iteration cap before converging.
    #[error("{what} did not converge within {limit} iterations")]
    NoConvergence { what: &'static str, limit: usize },

    /// Rejection sampling in graph generation exhausted its retry budget.
    #[error("graph generation exhausted {limit} retries for node {node}")]
    RetriesExhausted { node: usize, limit: usize },

    /// A file has the wrong magic, header, or payload shape.
    #[error("malformed trajectory file: {0}")]
    MalformedFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
