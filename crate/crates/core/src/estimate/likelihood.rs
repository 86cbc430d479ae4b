//! Rescaled log-likelihood of transition counts under an affine firing
//! rule, with its analytic gradient.
//!
//! The chain's log-likelihood separates over nodes once transitions are
//! reduced to per-state firing counts: node `i` contributes
//! `(1/T) sum_u [N_{u,i,1} ln q_i(u) + N_{u,i,0} ln(1 - q_i(u))]` where
//! `q_i(u)` is the node's firing probability at state `u`. The additive
//! term for the initial state does not depend on the parameters and is
//! excluded throughout.

use nalgebra::{DMatrix, DVector};

use crate::counts::TransitionCounts;
use crate::error::{Error, Result};
use crate::model::TransitionRule;
use crate::sim::State;

/// Rescaled log-likelihood, total and split by node.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodValue {
    /// Sum of the per-node contributions.
    pub total: f64,
    pub per_node: DVector<f64>,
}

/// Per-node sufficient statistics of a count table, laid out for repeated
/// likelihood and gradient evaluation: one row per distinct visited state.
pub(crate) struct SuffStats {
    t: f64,
    /// `m x (p + 1)`: visited states as 0/1 rows plus a trailing ones
    /// column, so `x * [w, c]` evaluates all firing probabilities at once.
    x: DMatrix<f64>,
    /// `m x p` firing counts `N_{u,i,1}`.
    n1: DMatrix<f64>,
    /// `m x p` holding counts `N_{u,i,0}`.
    n0: DMatrix<f64>,
    states: Vec<State>,
}

impl SuffStats {
    pub(crate) fn new(counts: &TransitionCounts) -> Self {
        let p = counts.p();
        let states: Vec<State> = counts.visited_states().collect();
        let m = states.len();
        let x = DMatrix::from_fn(m, p + 1, |k, j| {
            if j == p {
                1.0
            } else if states[k].bit(j) {
                1.0
            } else {
                0.0
            }
        });
        let n1 =
            DMatrix::from_fn(m, p, |k, i| counts.marginal_count(states[k], i, true) as f64);
        let n0 =
            DMatrix::from_fn(m, p, |k, i| counts.marginal_count(states[k], i, false) as f64);
        SuffStats { t: counts.t() as f64, x, n1, n0, states }
    }

    /// Node contribution at row coordinates `z = [w_1..w_p, c]`, or `None`
    /// when some visited state's firing probability leaves `(0, 1)`.
    pub(crate) fn node_value(&self, node: usize, z: &DVector<f64>) -> Option<f64> {
        if self.states.is_empty() {
            return Some(0.0);
        }
        let probs = &self.x * z;
        let mut total = 0.0;
        for k in 0..probs.len() {
            let q = probs[k];
            if q <= 0.0 || q >= 1.0 {
                return None;
            }
            total += self.n1[(k, node)] * q.ln() + self.n0[(k, node)] * (1.0 - q).ln();
        }
        Some(total / self.t)
    }

    /// Gradient of the node contribution in `z = [w_1..w_p, c]`.
    pub(crate) fn node_gradient(&self, node: usize, z: &DVector<f64>) -> Option<DVector<f64>> {
        if self.states.is_empty() {
            return Some(DVector::zeros(z.len()));
        }
        let probs = &self.x * z;
        let mut scores = DVector::zeros(probs.len());
        for k in 0..probs.len() {
            let q = probs[k];
            if q <= 0.0 || q >= 1.0 {
                return None;
            }
            scores[k] = (self.n1[(k, node)] / q - self.n0[(k, node)] / (1.0 - q)) / self.t;
        }
        Some(self.x.transpose() * scores)
    }

    /// Error naming the first visited state whose firing probability
    /// leaves `(0, 1)` at `z`.
    pub(crate) fn domain_error(&self, node: usize, z: &DVector<f64>) -> Error {
        let probs = &self.x * z;
        for k in 0..probs.len() {
            if probs[k] <= 0.0 || probs[k] >= 1.0 {
                return Error::ProbOutOfRange {
                    node,
                    state: self.states[k].value(),
                    value: probs[k],
                };
            }
        }
        Error::InvalidParams(format!("node {node}: no boundary probability found"))
    }
}

/// Row coordinates `[w_1..w_p, c]` of one node of the rule.
pub(crate) fn node_coords(rule: &TransitionRule, node: usize) -> DVector<f64> {
    let p = rule.p();
    let mut z = DVector::zeros(p + 1);
    for j in 0..p {
        z[j] = rule.weights()[(node, j)];
    }
    z[p] = rule.offsets()[node];
    z
}

fn check_dims(counts: &TransitionCounts, rule: &TransitionRule) -> Result<()> {
    if counts.p() != rule.p() {
        return Err(Error::DimensionMismatch(format!(
            "counts have p = {}, rule has p = {}",
            counts.p(),
            rule.p()
        )));
    }
    Ok(())
}

/// Rescaled log-likelihood of the counts under the rule. Every visited
/// state must give each node a firing probability strictly inside
/// `(0, 1)`; a boundary value is reported with the offending node and
/// state. Empty counts evaluate to zero.
pub fn log_likelihood(counts: &TransitionCounts, rule: &TransitionRule) -> Result<LikelihoodValue> {
    check_dims(counts, rule)?;
    let stats = SuffStats::new(counts);
    let p = counts.p();
    let mut per_node = DVector::zeros(p);
    for i in 0..p {
        let z = node_coords(rule, i);
        per_node[i] = stats.node_value(i, &z).ok_or_else(|| stats.domain_error(i, &z))?;
    }
    Ok(LikelihoodValue { total: per_node.sum(), per_node })
}

/// Gradient of [`log_likelihood`] in the rule's own coordinates: one
/// matrix row per node's weight block, one vector entry per offset.
pub fn log_likelihood_gradient(
    counts: &TransitionCounts,
    rule: &TransitionRule,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_dims(counts, rule)?;
    let stats = SuffStats::new(counts);
    let p = counts.p();
    let mut weights = DMatrix::zeros(p, p);
    let mut offsets = DVector::zeros(p);
    for i in 0..p {
        let z = node_coords(rule, i);
        let grad = stats.node_gradient(i, &z).ok_or_else(|| stats.domain_error(i, &z))?;
        for j in 0..p {
            weights[(i, j)] = grad[j];
        }
        offsets[i] = grad[p];
    }
    Ok((weights, offsets))
}
