//! Simulation, exact analysis, and estimation for Bernoulli autoregressive
//! (BAR) network processes.
//!
//! A BAR process is a Markov chain on `{0,1}^p`. At every step each node `i`
//! fires independently with a probability that is affine in the current
//! state: a convex combination of parent activities plus an exogenous noise
//! term. The directed graph underneath is exactly the sparsity pattern of
//! the weight matrix, so recovering the weights recovers the network.
//!
//! The crate is organized around that pipeline:
//!
//! * [`model`] — parameter sets, feasibility checks, reparameterizations,
//!   and Euclidean projection onto the feasible set.
//! * [`sim`] — seeded trajectory generation and random graph drawing.
//! * [`counts`] — transition counts and the regression design built from them.
//! * [`exact`] — dense transition matrix, stationary distribution, entropy
//!   rate, and divergence utilities for small `p`.
//! * [`estimate`] — maximum-likelihood and closed-form least-squares
//!   estimators for both the positive and the signed (generic) model.
//! * [`evaluate`] — edge recovery scoring (precision / recall / F1) and
//!   parameter error metrics.

pub mod counts;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod exact;
pub mod model;
pub mod rng;
pub mod sim;

pub use counts::{build_design, count_transitions, DesignMatrix, TransitionCounts};
pub use error::{Error, Result};
pub use estimate::{
    closed_form_estimate, closed_form_estimate_generic, log_likelihood, log_likelihood_gradient,
    ml_estimate, ml_estimate_generic, Diagnostics, EstimateResult, LikelihoodValue,
    OptimizerOptions, Reparam,
};
pub use evaluate::{infer_edges, param_errors, score, true_edges, EdgeSet, ParamErrors, ScoreReport};
pub use exact::{
    build_chain, empirical_row, entropy_rate, identifiability_probe, kl_divergence,
    stationary_matrix_free, transition_prob, tv_distance, ExactChain,
};
pub use model::{
    project_theta, project_theta_signed, BarParams, GenericBarParams, GraphSpec, ModelParams,
    ParamsFile, ReparamPositive, ReparamSigned, SpaceConfig, TransitionRule, ValidationReport,
};
pub use rng::SimRng;
pub use sim::{generate_graph, simulate, step, InitialDistribution, State, Trajectory};
