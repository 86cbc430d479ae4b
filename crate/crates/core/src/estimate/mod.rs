//! Parameter estimation from transition counts.
//!
//! Two estimator families are implemented for each model variant:
//!
//! * Maximum likelihood: the rescaled log-likelihood separates into one
//!   concave problem per node, each solved by projected gradient ascent
//!   with Armijo backtracking. The positive model ascends directly on its
//!   convex feasible set. The generic model's feasible set has a
//!   non-convex upper noise band, so the ascent runs on a convex
//!   relaxation (weight budget plus lower band) and the optimum is then
//!   projected onto the true set with its own sign pattern; the move, if
//!   any, is recorded in the diagnostics.
//! * Closed form: the noise offsets come from the empirical firing
//!   frequencies out of the all-zeros state, the weights from a
//!   least-squares fit of the remaining firing frequencies, followed by
//!   the same projection. Requires a visit to the all-zeros state and a
//!   full-rank design.

mod likelihood;

pub use likelihood::{log_likelihood, log_likelihood_gradient, LikelihoodValue};

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::counts::{DesignMatrix, TransitionCounts, RANK_TOL};
use crate::error::{Error, Result};
use crate::model::{
    project_row_positive, project_row_relaxed, project_theta, project_theta_signed, row_distance,
    BarParams, GenericBarParams, ModelParams, ParamsFile, ReparamPositive, ReparamSigned,
    SpaceConfig,
};
use crate::sim::State;
use likelihood::SuffStats;

/// Constraints within this distance of their boundary are reported as
/// active.
const ACTIVE_TOL: f64 = 1e-8;
/// Line-search steps below this are treated as a stall at the optimum.
const MIN_STEP: f64 = 1e-20;

/// Knobs of the projected gradient ascent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerOptions {
    /// Iteration cap per node.
    pub max_iters: usize,
    /// Convergence threshold on the projected-gradient step norm. The
    /// default suits small state spaces; when most states are visited only
    /// once (large `p`, short trajectories) the achievable floor is around
    /// 1e-7 and a looser value avoids running into the iteration cap.
    pub grad_tolerance: f64,
    /// First step size tried by the backtracking line search.
    pub armijo_init_step: f64,
    /// Multiplicative step shrink on rejection.
    pub armijo_shrink: f64,
    /// Sufficient-increase slope of the acceptance test.
    pub armijo_slope: f64,
    /// Projection moves beyond this are flagged in the diagnostics.
    pub projection_tolerance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            grad_tolerance: 1e-8,
            armijo_init_step: 1.0,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            projection_tolerance: 1e-10,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tolerance", self.grad_tolerance),
            ("armijo_init_step", self.armijo_init_step),
            ("projection_tolerance", self.projection_tolerance),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        let unit = [("armijo_shrink", self.armijo_shrink), ("armijo_slope", self.armijo_slope)];
        for (name, value) in unit {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must be in (0, 1)")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Estimation coordinates of either model variant.
#[derive(Clone, Debug, PartialEq)]
pub enum Reparam {
    Positive(ReparamPositive),
    Signed(ReparamSigned),
}

/// Side information about how an estimate was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// Column rank of the least-squares design (closed-form only).
    pub design_rank: Option<usize>,
    /// Feasible-set constraints active at the returned point.
    pub active_constraints: Vec<String>,
    /// Largest Euclidean distance a row moved in the final projection.
    pub projection_displacement: f64,
    /// Whether that displacement exceeds the projection tolerance.
    pub projection_moved: bool,
}

/// A fitted parameter set with its optimizer and projection history.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub params: ModelParams,
    /// Estimation coordinates of `params`.
    pub reparam: Reparam,
    /// Pre-projection coordinates, for estimators that first solve a
    /// relaxed or unconstrained problem.
    pub unprojected: Option<Reparam>,
    pub converged: bool,
    /// Largest per-node iteration count; zero for closed form.
    pub iterations: usize,
    /// Rescaled log-likelihood at the returned parameters.
    pub likelihood: LikelihoodValue,
    pub diagnostics: Diagnostics,
}

impl EstimateResult {
    /// Parameter-file JSON with an extra `diagnostics` object.
    pub fn to_json(&self, config: &SpaceConfig) -> Result<serde_json::Value> {
        let params = ParamsFile::from_params(&self.params, config);
        let mut value = serde_json::to_value(&params)?;
        let diagnostics = serde_json::json!({
            "iterations": self.iterations,
            "converged": self.converged,
            "log_likelihood": self.likelihood.total,
            "design_rank": self.diagnostics.design_rank,
            "projection_displacement": self.diagnostics.projection_displacement,
            "projection_moved": self.diagnostics.projection_moved,
            "active_constraints": self.diagnostics.active_constraints,
        });
        value
            .as_object_mut()
            .expect("parameter files serialize to objects")
            .insert("diagnostics".into(), diagnostics);
        Ok(value)
    }

    pub fn save(&self, config: &SpaceConfig, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_json(config)?)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

struct NodeOutcome {
    z: DVector<f64>,
    iterations: usize,
    converged: bool,
}

/// Largest trial step the curvature estimate may propose.
const MAX_TRIAL_STEP: f64 = 1e8;

/// Projected gradient ascent on one node's concave problem. `project`
/// must map onto a convex set on which the objective is finite except
/// possibly where firing probabilities reach 1; such points are rejected
/// by the line search.
///
/// The trial step follows the secant curvature estimate
/// `|dz|^2 / (dz . dg)` from the last accepted move, backtracking until
/// the Armijo test holds; convergence is declared when the fixed-step
/// gradient projection stops moving the iterate.
fn maximize_node<P>(
    stats: &SuffStats,
    node: usize,
    z0: DVector<f64>,
    project: &P,
    opts: &OptimizerOptions,
) -> NodeOutcome
where
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut z = z0;
    let mut value = stats
        .node_value(node, &z)
        .expect("the interior start lies in the likelihood domain");
    let mut grad = stats
        .node_gradient(node, &z)
        .expect("the interior start lies in the likelihood domain");
    let mut trial = opts.armijo_init_step;
    for iter in 0..opts.max_iters {
        let probe = project(&(&z + opts.armijo_init_step * &grad));
        if (&probe - &z).norm() <= opts.grad_tolerance {
            return NodeOutcome { z, iterations: iter, converged: true };
        }
        let mut step = trial;
        let mut accepted = false;
        while step >= MIN_STEP {
            let candidate = if step == opts.armijo_init_step {
                probe.clone()
            } else {
                project(&(&z + step * &grad))
            };
            if let Some(cand_value) = stats.node_value(node, &candidate) {
                let dz = &candidate - &z;
                if cand_value >= value + opts.armijo_slope * grad.dot(&dz) {
                    let new_grad = stats
                        .node_gradient(node, &candidate)
                        .expect("accepted iterates stay in the likelihood domain");
                    let curvature = dz.dot(&(&grad - &new_grad));
                    trial = if curvature > 0.0 {
                        (dz.norm_squared() / curvature).clamp(MIN_STEP, MAX_TRIAL_STEP)
                    } else {
                        (2.0 * step).min(MAX_TRIAL_STEP)
                    };
                    z = candidate;
                    value = cand_value;
                    grad = new_grad;
                    accepted = true;
                    break;
                }
            }
            step *= opts.armijo_shrink;
        }
        if !accepted {
            // No step passes the increase test: the iterate is stationary
            // at floating-point resolution.
            return NodeOutcome { z, iterations: iter + 1, converged: true };
        }
    }
    NodeOutcome { z, iterations: opts.max_iters, converged: false }
}

/// Runs the per-node ascent for every node and reassembles the rows.
/// Returns `(weights, offsets, max iterations, all converged)`.
fn per_node_ascent<P>(
    stats: &SuffStats,
    config: &SpaceConfig,
    opts: &OptimizerOptions,
    project: P,
) -> (DMatrix<f64>, DVector<f64>, usize, bool)
where
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    let p = config.p;
    let mut z0 = DVector::zeros(p + 1);
    z0[p] = 0.5 * (config.rho_min + config.rho_max);
    let mut weights = DMatrix::zeros(p, p);
    let mut offsets = DVector::zeros(p);
    let mut iterations = 0;
    let mut converged = true;
    for i in 0..p {
        let outcome = maximize_node(stats, i, z0.clone(), &project, opts);
        for j in 0..p {
            weights[(i, j)] = outcome.z[j];
        }
        offsets[i] = outcome.z[p];
        iterations = iterations.max(outcome.iterations);
        converged &= outcome.converged;
    }
    (weights, offsets, iterations, converged)
}

fn check_counts(counts: &TransitionCounts, config: &SpaceConfig) -> Result<()> {
    if counts.p() != config.p {
        return Err(Error::DimensionMismatch(format!(
            "counts have p = {}, config has p = {}",
            counts.p(),
            config.p
        )));
    }
    if counts.t() == 0 {
        return Err(Error::NoTransitions);
    }
    Ok(())
}

fn check_design(counts: &TransitionCounts, design: &DesignMatrix) -> Result<()> {
    if design.u_m.ncols() != counts.p() || design.m() != counts.num_visited() {
        return Err(Error::DimensionMismatch(
            "design matrix does not match the count table it should be built from".into(),
        ));
    }
    Ok(())
}

fn max_row_displacement(
    raw_w: &DMatrix<f64>,
    raw_c: &DVector<f64>,
    proj_w: &DMatrix<f64>,
    proj_c: &DVector<f64>,
) -> f64 {
    let p = raw_c.len();
    let mut largest = 0.0f64;
    for i in 0..p {
        let mut raw = DVector::zeros(p + 1);
        let mut projected = DVector::zeros(p + 1);
        for j in 0..p {
            raw[j] = raw_w[(i, j)];
            projected[j] = proj_w[(i, j)];
        }
        raw[p] = raw_c[i];
        projected[p] = proj_c[i];
        largest = largest.max(row_distance(&raw, &projected));
    }
    largest
}

fn active_constraints_positive(rep: &ReparamPositive, config: &SpaceConfig) -> Vec<String> {
    let mut active = Vec::new();
    for i in 0..rep.p() {
        for j in 0..rep.p() {
            if rep.a[(i, j)] <= ACTIVE_TOL {
                active.push(format!("node {i}: a[{j}] = 0"));
            }
        }
        let total: f64 = rep.a.row(i).sum();
        if total >= 1.0 - config.b_min - ACTIVE_TOL {
            active.push(format!("node {i}: weight sum at 1 - b_min"));
        }
        let slack = 1.0 - total;
        if (rep.c[i] - config.rho_min * slack).abs() <= ACTIVE_TOL {
            active.push(format!("node {i}: c at lower noise band"));
        }
        if (rep.c[i] - config.rho_max * slack).abs() <= ACTIVE_TOL {
            active.push(format!("node {i}: c at upper noise band"));
        }
    }
    active
}

fn active_constraints_signed(rep: &ReparamSigned, config: &SpaceConfig) -> Vec<String> {
    let mut active = Vec::new();
    for i in 0..rep.p() {
        for j in 0..rep.p() {
            if rep.a_bar[(i, j)].abs() <= ACTIVE_TOL {
                active.push(format!("node {i}: a_bar[{j}] = 0"));
            }
        }
        let abs_sum: f64 = rep.a_bar.row(i).iter().map(|v| v.abs()).sum();
        let neg_sum: f64 = rep.a_bar.row(i).iter().map(|v| (-v).max(0.0)).sum();
        if abs_sum >= 1.0 - config.b_min - ACTIVE_TOL {
            active.push(format!("node {i}: weight sum at 1 - b_min"));
        }
        let slack = 1.0 - abs_sum;
        let noise = rep.c_bar[i] - neg_sum;
        if (noise - config.rho_min * slack).abs() <= ACTIVE_TOL {
            active.push(format!("node {i}: c_bar at lower noise band"));
        }
        if (noise - config.rho_max * slack).abs() <= ACTIVE_TOL {
            active.push(format!("node {i}: c_bar at upper noise band"));
        }
    }
    active
}

/// Maximum-likelihood fit of the positive model.
pub fn ml_estimate(
    counts: &TransitionCounts,
    config: &SpaceConfig,
    opts: &OptimizerOptions,
) -> Result<EstimateResult> {
    opts.validate()?;
    check_counts(counts, config)?;
    let stats = SuffStats::new(counts);
    let (weights, offsets, iterations, converged) =
        per_node_ascent(&stats, config, opts, |x| project_row_positive(x, config));
    let rep = ReparamPositive { a: weights, c: offsets };
    let params = BarParams::from_reparam(&rep, config)?;
    let likelihood = log_likelihood(counts, &rep.rule())?;
    let diagnostics = Diagnostics {
        design_rank: None,
        active_constraints: active_constraints_positive(&rep, config),
        projection_displacement: 0.0,
        projection_moved: false,
    };
    Ok(EstimateResult {
        params: ModelParams::Positive(params),
        reparam: Reparam::Positive(rep),
        unprojected: None,
        converged,
        iterations,
        likelihood,
        diagnostics,
    })
}

/// Maximum-likelihood fit of the generic model via the convex relaxation.
pub fn ml_estimate_generic(
    counts: &TransitionCounts,
    config: &SpaceConfig,
    opts: &OptimizerOptions,
) -> Result<EstimateResult> {
    opts.validate()?;
    check_counts(counts, config)?;
    let stats = SuffStats::new(counts);
    let (weights, offsets, iterations, converged) =
        per_node_ascent(&stats, config, opts, |x| project_row_relaxed(x, config));
    let relaxed = ReparamSigned { a_bar: weights, c_bar: offsets };
    let projected = project_theta_signed(&relaxed, config, None);
    let displacement =
        max_row_displacement(&relaxed.a_bar, &relaxed.c_bar, &projected.a_bar, &projected.c_bar);
    let params = GenericBarParams::from_reparam_signed(&projected, config)?;
    let likelihood = log_likelihood(counts, &projected.rule())?;
    let diagnostics = Diagnostics {
        design_rank: None,
        active_constraints: active_constraints_signed(&projected, config),
        projection_displacement: displacement,
        projection_moved: displacement > opts.projection_tolerance,
    };
    Ok(EstimateResult {
        params: ModelParams::Generic(params),
        reparam: Reparam::Signed(projected),
        unprojected: Some(Reparam::Signed(relaxed)),
        converged,
        iterations,
        likelihood,
        diagnostics,
    })
}

/// Offsets from the all-zeros state and the least-squares weight solve
/// shared by both closed-form estimators. Returns `(c_hat, solution)`
/// where column `r` of `solution` is the weight row of node `r`.
fn closed_form_solve(
    counts: &TransitionCounts,
    design: &DesignMatrix,
    shared_noise: bool,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = counts.p();
    let zeros_visits = counts.visit_count(State::ZEROS);
    if zeros_visits == 0 {
        return Err(Error::ZerosStateUnvisited);
    }
    if !design.full_rank {
        return Err(Error::RankDeficient { rank: design.rank, p });
    }
    let mut c = DVector::from_fn(p, |i, _| {
        counts.marginal_count(State::ZEROS, i, true) as f64 / zeros_visits as f64
    });
    if shared_noise {
        let mean = c.mean();
        c.fill(mean);
    }
    let mut rhs = design.y.clone();
    for r in 0..p {
        rhs.column_mut(r).add_scalar_mut(-c[r]);
    }
    let svd = design.u_m.clone().svd(true, true);
    let solution = svd
        .solve(&rhs, RANK_TOL)
        .map_err(|message| Error::InvalidParams(message.into()))?;
    Ok((c, solution))
}

/// Closed-form least-squares fit of the positive model. `shared_noise`
/// replaces the per-node offsets by their mean before the weight solve,
/// for processes known to share one noise level across nodes.
pub fn closed_form_estimate(
    counts: &TransitionCounts,
    design: &DesignMatrix,
    config: &SpaceConfig,
    shared_noise: bool,
) -> Result<EstimateResult> {
    check_counts(counts, config)?;
    check_design(counts, design)?;
    let (c, solution) = closed_form_solve(counts, design, shared_noise)?;
    let raw = ReparamPositive { a: solution.transpose(), c };
    let projected = project_theta(&raw, config);
    let displacement = max_row_displacement(&raw.a, &raw.c, &projected.a, &projected.c);
    let params = BarParams::from_reparam(&projected, config)?;
    let likelihood = log_likelihood(counts, &projected.rule())?;
    let diagnostics = Diagnostics {
        design_rank: Some(design.rank),
        active_constraints: active_constraints_positive(&projected, config),
        projection_displacement: displacement,
        projection_moved: displacement > OptimizerOptions::default().projection_tolerance,
    };
    Ok(EstimateResult {
        params: ModelParams::Positive(params),
        reparam: Reparam::Positive(projected),
        unprojected: Some(Reparam::Positive(raw)),
        converged: true,
        iterations: 0,
        likelihood,
        diagnostics,
    })
}

/// Closed-form least-squares fit of the generic model: the signed weight
/// rows are sign-split into excitatory and inhibitory parts, and the
/// projection keeps the estimated supports.
pub fn closed_form_estimate_generic(
    counts: &TransitionCounts,
    design: &DesignMatrix,
    config: &SpaceConfig,
) -> Result<EstimateResult> {
    check_counts(counts, config)?;
    check_design(counts, design)?;
    let (c_bar, solution) = closed_form_solve(counts, design, false)?;
    let raw = ReparamSigned { a_bar: solution.transpose(), c_bar };
    let projected = project_theta_signed(&raw, config, None);
    let displacement =
        max_row_displacement(&raw.a_bar, &raw.c_bar, &projected.a_bar, &projected.c_bar);
    let params = GenericBarParams::from_reparam_signed(&projected, config)?;
    let likelihood = log_likelihood(counts, &projected.rule())?;
    let diagnostics = Diagnostics {
        design_rank: Some(design.rank),
        active_constraints: active_constraints_signed(&projected, config),
        projection_displacement: displacement,
        projection_moved: displacement > OptimizerOptions::default().projection_tolerance,
    };
    Ok(EstimateResult {
        params: ModelParams::Generic(params),
        reparam: Reparam::Signed(projected),
        unprojected: Some(Reparam::Signed(raw)),
        converged: true,
        iterations: 0,
        likelihood,
        diagnostics,
    })
}
