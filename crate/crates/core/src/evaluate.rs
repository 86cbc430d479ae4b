//! Structure-recovery scoring: which edges an estimate implies, and how
//! well they match the generating graph.
//!
//! An edge `(j, i)` means node `j` feeds node `i`. The generating graph
//! places an edge wherever a weight is strictly positive; an estimate is
//! read by thresholding its projected weights at a fraction of the
//! smallest weight the generator was allowed to use.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Directed edges `(source, target)` over a fixed node count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        for &(j, i) in &edges {
            if j >= p || i >= p {
                return Err(Error::InvalidConfig(format!(
                    "edge ({j}, {i}) is outside a {p}-node graph"
                )));
            }
        }
        Ok(Self { p, edges })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, source: usize, target: usize) -> bool {
        self.edges.contains(&(source, target))
    }

    /// Edges in ascending `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }
}

/// Entrywise distances between two parameter sets, on the scales the
/// recovery experiments report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamErrors {
    /// Largest absolute entry of the signed-weight difference
    /// `(A - A_tilde)` vs `(A' - A_tilde')`.
    pub max_abs_a: f64,
    /// Frobenius norm of that difference.
    pub frob_a: f64,
    /// Largest absolute noise-weight difference.
    pub err_b: f64,
    /// Largest absolute noise-level difference.
    pub err_rho: f64,
}

/// Precision, recall, and F1 of an inferred edge set against the truth.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Filled by the caller when both parameter sets are at hand.
    pub param_errors: Option<ParamErrors>,
}

/// Edges of the generating graph: `(j, i)` wherever node `j`'s weight in
/// node `i`'s rule is strictly positive, in either weight matrix.
pub fn true_edges(params: &ModelParams) -> EdgeSet {
    let p = params.p();
    let mut edges = BTreeSet::new();
    for i in 0..p {
        for j in 0..p {
            let excitatory = params.a()[(i, j)] > 0.0;
            let inhibitory = params.a_tilde().map_or(false, |m| m[(i, j)] > 0.0);
            if excitatory || inhibitory {
                edges.insert((j, i));
            }
        }
    }
    EdgeSet { p, edges }
}

/// Edges an estimate implies: `(j, i)` wherever either estimated weight
/// reaches `c_thresh * a_min`.
pub fn infer_edges(estimate: &ModelParams, a_min: f64, c_thresh: f64) -> Result<EdgeSet> {
    if !(a_min > 0.0 && a_min < 1.0) {
        return Err(Error::InvalidConfig(format!("a_min must be in (0, 1), got {a_min}")));
    }
    if !(c_thresh > 0.0 && c_thresh < 1.0) {
        return Err(Error::InvalidConfig(format!("c_thresh must be in (0, 1), got {c_thresh}")));
    }
    let threshold = c_thresh * a_min;
    let p = estimate.p();
    let mut edges = BTreeSet::new();
    for i in 0..p {
        for j in 0..p {
            let mut weight = estimate.a()[(i, j)];
            if let Some(tilde) = estimate.a_tilde() {
                weight = weight.max(tilde[(i, j)]);
            }
            if weight >= threshold {
                edges.insert((j, i));
            }
        }
    }
    Ok(EdgeSet { p, edges })
}

/// Precision/recall/F1 of `inferred` against `truth`.
///
/// Degenerate conventions: an empty inferred set has precision 0; an
/// empty truth has recall 1 when the inferred set is also empty and 0
/// otherwise; F1 is 0 whenever either component is 0.
pub fn score(truth: &EdgeSet, inferred: &EdgeSet) -> Result<ScoreReport> {
    if truth.p != inferred.p {
        return Err(Error::DimensionMismatch(format!(
            "edge sets have p = {} and p = {}",
            truth.p, inferred.p
        )));
    }
    let true_positives = truth.edges.intersection(&inferred.edges).count();
    let false_positives = inferred.edges.len() - true_positives;
    let false_negatives = truth.edges.len() - true_positives;
    let precision = if inferred.is_empty() {
        0.0
    } else {
        true_positives as f64 / inferred.len() as f64
    };
    let recall = if truth.is_empty() {
        if inferred.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        true_positives as f64 / truth.len() as f64
    };
    let f1 = if precision > 0.0 && recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ScoreReport {
        precision,
        recall,
        f1,
        true_positives,
        false_positives,
        false_negatives,
        param_errors: None,
    })
}

/// Entrywise parameter errors between two models of the same size. The
/// weight comparison uses the signed combination `A - A_tilde`, which is
/// defined for both variants and penalizes sign mistakes.
pub fn param_errors(truth: &ModelParams, estimate: &ModelParams) -> Result<ParamErrors> {
    if truth.p() != estimate.p() {
        return Err(Error::DimensionMismatch(format!(
            "parameter sets have p = {} and p = {}",
            truth.p(),
            estimate.p()
        )));
    }
    let signed = |params: &ModelParams| match params.a_tilde() {
        Some(tilde) => params.a() - tilde,
        None => params.a().clone(),
    };
    let diff = signed(truth) - signed(estimate);
    Ok(ParamErrors {
        max_abs_a: diff.amax(),
        frob_a: diff.norm(),
        err_b: (truth.b() - estimate.b()).amax(),
        err_rho: (truth.rho_w() - estimate.rho_w()).amax(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BarParams, GenericBarParams, GraphSpec, SpaceConfig};
    use crate::rng::{stream, SimRng};
    use crate::sim::generate_graph;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn positive(a: DMatrix<f64>) -> ModelParams {
        let p = a.nrows();
        let b = nalgebra::DVector::from_fn(p, |i, _| 1.0 - a.row(i).sum());
        let rho = nalgebra::DVector::from_element(p, 0.5);
        ModelParams::Positive(BarParams::new(a, b, rho).unwrap())
    }

    fn generic(a: DMatrix<f64>, a_tilde: DMatrix<f64>) -> ModelParams {
        let p = a.nrows();
        let b = nalgebra::DVector::from_fn(p, |i, _| {
            1.0 - a.row(i).sum() - a_tilde.row(i).sum()
        });
        let rho = nalgebra::DVector::from_element(p, 0.5);
        ModelParams::Generic(GenericBarParams::new(a, a_tilde, b, rho).unwrap())
    }

    #[test]
    fn single_positive_weight_is_one_edge() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 0.3;
        let edges = true_edges(&positive(a));
        assert_eq!(edges.len(), 1);
        assert!(edges.contains(1, 0));
    }

    #[test]
    fn zero_weights_give_an_empty_graph() {
        assert!(true_edges(&positive(DMatrix::zeros(3, 3))).is_empty());
        assert!(true_edges(&generic(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2))).is_empty());
    }

    #[test]
    fn generic_edges_are_the_union_of_supports() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        let a_tilde = DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.0, 0.3]);
        let edges = true_edges(&generic(a, a_tilde));
        let expected = EdgeSet::new(2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        assert_eq!(edges, expected);
    }

    #[test]
    fn inference_thresholds_at_a_fraction_of_a_min() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 0.09;
        let estimate = positive(a);
        let edges = infer_edges(&estimate, 0.1, 0.5).unwrap();
        assert!(edges.contains(1, 0));
        assert_eq!(edges.len(), 1);
        assert!(infer_edges(&positive(DMatrix::zeros(2, 2)), 0.1, 0.5).unwrap().is_empty());
        assert!(infer_edges(&estimate, 0.1, 1.0).is_err());
        assert!(infer_edges(&estimate, 0.0, 0.5).is_err());
    }

    #[test]
    fn near_one_threshold_recovers_exact_estimates() {
        let config = SpaceConfig::with_defaults(6).unwrap();
        for signed in [false, true] {
            let spec = GraphSpec::new(6, 3, 0.1, signed).unwrap();
            let params = generate_graph(&spec, &config, 9).unwrap();
            let inferred = infer_edges(&params, 0.1, 0.99).unwrap();
            assert_eq!(inferred, true_edges(&params));
        }
    }

    #[test]
    fn lowering_the_threshold_only_adds_edges() {
        let config = SpaceConfig::with_defaults(5).unwrap();
        let spec = GraphSpec::new(5, 3, 0.1, true).unwrap();
        let params = generate_graph(&spec, &config, 17).unwrap();
        let mut previous = EdgeSet::new(5, []).unwrap();
        for c_thresh in [0.9, 0.5, 0.1, 0.01] {
            let inferred = infer_edges(&params, 0.1, c_thresh).unwrap();
            assert!(previous.edges().all(|(j, i)| inferred.contains(j, i)));
            previous = inferred;
        }
    }

    #[test]
    fn perfect_recovery_scores_one() {
        let edges = EdgeSet::new(3, [(0, 1), (2, 2)]).unwrap();
        let report = score(&edges, &edges.clone()).unwrap();
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.true_positives, 2);
    }

    #[test]
    fn half_right_scores_one_half() {
        let truth = EdgeSet::new(3, [(0, 1), (1, 0)]).unwrap();
        let inferred = EdgeSet::new(3, [(0, 1), (0, 0)]).unwrap();
        let report = score(&truth, &inferred).unwrap();
        assert_abs_diff_eq!(report.precision, 0.5);
        assert_abs_diff_eq!(report.recall, 0.5);
        assert_abs_diff_eq!(report.f1, 0.5);
        assert_eq!(
            (report.true_positives, report.false_positives, report.false_negatives),
            (1, 1, 1)
        );
    }

    #[test]
    fn disjoint_sets_score_zero() {
        let truth = EdgeSet::new(2, [(0, 1)]).unwrap();
        let inferred = EdgeSet::new(2, [(1, 0)]).unwrap();
        assert_eq!(score(&truth, &inferred).unwrap().f1, 0.0);
    }

    #[test]
    fn degenerate_sets_follow_the_documented_conventions() {
        let empty = EdgeSet::new(2, []).unwrap();
        let some = EdgeSet::new(2, [(0, 1)]).unwrap();
        let report = score(&some, &empty).unwrap();
        assert_eq!((report.precision, report.recall, report.f1), (0.0, 0.0, 0.0));
        let report = score(&empty, &empty.clone()).unwrap();
        assert_eq!((report.precision, report.recall, report.f1), (0.0, 1.0, 0.0));
        let report = score(&empty, &some).unwrap();
        assert_eq!((report.precision, report.recall, report.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn f1_is_the_harmonic_mean_between_the_components() {
        let mut rng = SimRng::new(5, stream::PARAMS);
        for _ in 0..200 {
            let draw = |rng: &mut SimRng| {
                let count = rng.index(8);
                let edges: Vec<(usize, usize)> =
                    (0..count).map(|_| (rng.index(3), rng.index(3))).collect();
                EdgeSet::new(3, edges).unwrap()
            };
            let truth = draw(&mut rng);
            let inferred = draw(&mut rng);
            let report = score(&truth, &inferred).unwrap();
            if report.precision > 0.0 && report.recall > 0.0 {
                assert_abs_diff_eq!(
                    report.f1,
                    2.0 / (report.precision.recip() + report.recall.recip()),
                    epsilon = 1e-15
                );
                assert!(report.f1 >= report.precision.min(report.recall) - 1e-15);
                assert!(report.f1 <= report.precision.max(report.recall) + 1e-15);
            }
            if !truth.is_empty() && !inferred.is_empty() {
                let swapped = score(&inferred, &truth).unwrap();
                assert_abs_diff_eq!(report.precision, swapped.recall, epsilon = 1e-15);
                assert_abs_diff_eq!(report.recall, swapped.precision, epsilon = 1e-15);
                assert_abs_diff_eq!(report.f1, swapped.f1, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let small = EdgeSet::new(2, []).unwrap();
        let large = EdgeSet::new(3, []).unwrap();
        assert!(score(&small, &large).is_err());
        assert!(EdgeSet::new(2, [(2, 0)]).is_err());
    }

    #[test]
    fn parameter_errors_on_a_hand_example() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 0.3;
        let truth = positive(a);
        let mut a_hat = DMatrix::zeros(2, 2);
        a_hat[(0, 1)] = 0.25;
        a_hat[(1, 0)] = 0.04;
        let estimate = positive(a_hat);
        let errors = param_errors(&truth, &estimate).unwrap();
        assert_abs_diff_eq!(errors.max_abs_a, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(errors.frob_a, (0.05f64.powi(2) + 0.04f64.powi(2)).sqrt());
        assert_abs_diff_eq!(errors.err_b, 0.05, epsilon = 1e-15);
        assert_eq!(errors.err_rho, 0.0);
    }

    #[test]
    fn signed_weights_compare_across_variants() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 0.3;
        let truth = positive(a);
        let a_hat = DMatrix::zeros(2, 2);
        let mut tilde = DMatrix::zeros(2, 2);
        tilde[(0, 1)] = 0.2;
        let estimate = generic(a_hat, tilde);
        let errors = param_errors(&truth, &estimate).unwrap();
        assert_abs_diff_eq!(errors.max_abs_a, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn edge_iteration_is_sorted() {
        let edges = EdgeSet::new(3, [(2, 0), (0, 1), (0, 0)]).unwrap();
        let listed: Vec<_> = edges.edges().collect();
        assert_eq!(listed, vec![(0, 0), (0, 1), (2, 0)]);
    }
}
