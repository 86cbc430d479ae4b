//! Exhaustive-state oracle for small node counts.
//!
//! For `p` nodes the chain lives on `2^p` states, and the one-step
//! transition probability factorizes over nodes: each target bit
//! contributes its firing probability or its complement. That product
//! form builds the dense transition matrix, the stationary distribution
//! (computed twice, by power iteration and by a direct linear solve, and
//! cross-checked), the entropy rate, and a brute-force identifiability
//! probe comparing two parameter sets through their full transition laws.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::counts::TransitionCounts;
use crate::error::{Error, Result};
use crate::model::TransitionRule;
use crate::sim::State;

/// Dense-matrix cap: `2^12` states is the largest comfortable dense chain.
pub const MAX_DENSE_P: usize = 12;
/// Matrix-free cap for the power iteration.
pub const MAX_EXACT_P: usize = 14;

const POWER_RESIDUAL_TOL: f64 = 1e-12;
const METHOD_AGREEMENT_TOL: f64 = 1e-10;
const MAX_POWER_ITERS: usize = 100_000;

/// Exact transition law of a chain: dense row-stochastic matrix plus its
/// stationary distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactChain {
    p: usize,
    matrix: DMatrix<f64>,
    pi: DVector<f64>,
}

impl ExactChain {
    pub fn p(&self) -> usize {
        self.p
    }

    /// Row-stochastic transition matrix, rows and columns in ascending
    /// state encoding.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Stationary distribution over ascending state encodings.
    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn prob(&self, u: State, v: State) -> f64 {
        self.matrix[(u.value() as usize, v.value() as usize)]
    }

    /// CSV rows `state_u,state_v,prob`.
    pub fn write_matrix_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "state_u,state_v,prob")?;
        for u in 0..self.matrix.nrows() {
            for v in 0..self.matrix.ncols() {
                writeln!(out, "{u},{v},{}", self.matrix[(u, v)])?;
            }
        }
        Ok(())
    }

    /// CSV rows `state,pi`.
    pub fn write_stationary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "state,pi")?;
        for u in 0..self.pi.len() {
            writeln!(out, "{u},{}", self.pi[u])?;
        }
        Ok(())
    }
}

/// One-step probability from `u` to `v`: the product over nodes of the
/// firing probability (bit set) or its complement (bit clear).
pub fn transition_prob(rule: &TransitionRule, u: State, v: State) -> f64 {
    let probs = rule.success_probs(u);
    let mut prob = 1.0;
    for i in 0..rule.p() {
        prob *= if v.bit(i) { probs[i] } else { 1.0 - probs[i] };
    }
    prob
}

/// Full row `p_{u,·}` over ascending encodings, built by doubling: node
/// `i` splits every partial product into a fired and an unfired branch.
fn product_row(probs: &DVector<f64>) -> Vec<f64> {
    let p = probs.len();
    let mut row = vec![0.0; 1usize << p];
    row[0] = 1.0;
    let mut size = 1usize;
    for i in 0..p {
        let q = probs[i];
        for j in 0..size {
            let partial = row[j];
            row[j + size] = partial * q;
            row[j] = partial * (1.0 - q);
        }
        size <<= 1;
    }
    row
}

fn check_exact_p(p: usize, max: usize, what: &'static str) -> Result<()> {
    if p > max {
        return Err(Error::TooLarge { p, max, what });
    }
    Ok(())
}

/// One pass of `pi -> pi P` without materializing `P`.
fn matrix_free_pass(rule: &TransitionRule, pi: &[f64]) -> Vec<f64> {
    let p = rule.p();
    let mut next = vec![0.0; pi.len()];
    for (u, &mass) in pi.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let probs = rule.success_probs(State::from_value(u as u64, p).unwrap());
        let row = product_row(&probs);
        for (slot, prob) in next.iter_mut().zip(row.iter()) {
            *slot += mass * prob;
        }
    }
    next
}

fn power_iteration<F: Fn(&[f64]) -> Vec<f64>>(n: usize, pass: F) -> Result<DVector<f64>> {
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..MAX_POWER_ITERS {
        let next = pass(&pi);
        let residual: f64 = pi.iter().zip(next.iter()).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if residual <= POWER_RESIDUAL_TOL {
            let total: f64 = pi.iter().sum();
            return Ok(DVector::from_vec(pi) / total);
        }
    }
    Err(Error::NoConvergence { what: "stationary power iteration", limit: MAX_POWER_ITERS })
}

/// Stationary distribution as the kernel of `P^T - I`, pinned down by
/// replacing the last balance equation with the normalization.
fn stationary_linear_solve(matrix: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = matrix.nrows();
    let mut system = matrix.transpose();
    for i in 0..n {
        system[(i, i)] -= 1.0;
    }
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NoConvergence { what: "stationary linear solve", limit: 1 })?;
    let total: f64 = pi.sum();
    Ok(pi / total)
}

/// Assembles the dense chain and its stationary distribution. The
/// stationary vector is computed by two independent methods that must
/// agree; the linear-solve result is kept.
pub fn build_chain(rule: &TransitionRule) -> Result<ExactChain> {
    let p = rule.p();
    check_exact_p(p, MAX_DENSE_P, "a dense transition matrix")?;
    let n = 1usize << p;
    let mut matrix = DMatrix::zeros(n, n);
    for u in 0..n {
        let probs = rule.success_probs(State::from_value(u as u64, p).unwrap());
        let row = product_row(&probs);
        for (v, &prob) in row.iter().enumerate() {
            matrix[(u, v)] = prob;
        }
    }
    let by_power = power_iteration(n, |pi| {
        let mut next = vec![0.0; n];
        for (u, &mass) in pi.iter().enumerate() {
            for v in 0..n {
                next[v] += mass * matrix[(u, v)];
            }
        }
        next
    })?;
    let by_solve = stationary_linear_solve(&matrix)?;
    let gap = (&by_power - &by_solve).amax();
    if gap > METHOD_AGREEMENT_TOL {
        return Err(Error::StationaryMismatch { gap, tol: METHOD_AGREEMENT_TOL });
    }
    Ok(ExactChain { p, matrix, pi: by_solve })
}

/// Stationary distribution by matrix-free power iteration, for chains too
/// large to hold densely (up to `p = 14`).
pub fn stationary_matrix_free(rule: &TransitionRule) -> Result<DVector<f64>> {
    let p = rule.p();
    check_exact_p(p, MAX_EXACT_P, "matrix-free stationary analysis")?;
    power_iteration(1usize << p, |pi| matrix_free_pass(rule, pi))
}

/// Entropy rate `-sum_u pi_u sum_v p_uv ln p_uv` in nats.
pub fn entropy_rate(chain: &ExactChain) -> f64 {
    let n = chain.matrix.nrows();
    let mut total = 0.0;
    for u in 0..n {
        let mut row_entropy = 0.0;
        for v in 0..n {
            let prob = chain.matrix[(u, v)];
            if prob > 0.0 {
                row_entropy -= prob * prob.ln();
            }
        }
        total += chain.pi[u] * row_entropy;
    }
    total
}

/// Empirical transition row out of `u`, with the uniform convention for
/// unvisited states.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalRow {
    /// `N_uv / N_u` over ascending encodings; `2^-p` everywhere when
    /// `N_u = 0`.
    pub q: DVector<f64>,
    pub visited: bool,
}

pub fn empirical_row(counts: &TransitionCounts, u: State) -> Result<EmpiricalRow> {
    let p = counts.p();
    check_exact_p(p, MAX_EXACT_P, "a dense empirical row")?;
    let n = 1usize << p;
    let n_u = counts.visit_count(u);
    if n_u == 0 {
        return Ok(EmpiricalRow { q: DVector::from_element(n, 1.0 / n as f64), visited: false });
    }
    let q = DVector::from_fn(n, |v, _| {
        counts.pair_count(u, State::from_value(v as u64, p).unwrap()) as f64 / n_u as f64
    });
    Ok(EmpiricalRow { q, visited: true })
}

/// Kullback-Leibler divergence `sum q ln(q/p)` in nats, with the
/// `0 ln 0 = 0` convention. A `q`-atom outside `p`'s support makes the
/// divergence infinite, which is reported as a distinct error.
pub fn kl_divergence(q: &DVector<f64>, p: &DVector<f64>) -> Result<f64> {
    assert_eq!(q.len(), p.len(), "distributions must share support size");
    let mut total = 0.0;
    for i in 0..q.len() {
        if q[i] > 0.0 {
            if p[i] <= 0.0 {
                return Err(Error::InfiniteDivergence { index: i });
            }
            total += q[i] * (q[i] / p[i]).ln();
        }
    }
    Ok(total)
}

/// Total-variation distance `(1/2) ||q - p||_1`.
pub fn tv_distance(q: &DVector<f64>, p: &DVector<f64>) -> f64 {
    assert_eq!(q.len(), p.len(), "distributions must share support size");
    0.5 * q.iter().zip(p.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Largest absolute difference between the two full transition laws:
/// zero exactly when the parameters induce the same chain.
pub fn identifiability_probe(a: &TransitionRule, b: &TransitionRule) -> Result<f64> {
    if a.p() != b.p() {
        return Err(Error::DimensionMismatch(format!(
            "rules have p = {} and p = {}",
            a.p(),
            b.p()
        )));
    }
    let p = a.p();
    check_exact_p(p, MAX_EXACT_P, "the identifiability probe")?;
    let mut max_gap = 0.0f64;
    for u in State::all(p) {
        let row_a = product_row(&a.success_probs(u));
        let row_b = product_row(&b.success_probs(u));
        for (x, y) in row_a.iter().zip(row_b.iter()) {
            max_gap = max_gap.max((x - y).abs());
        }
    }
    Ok(max_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphSpec, ReparamPositive, SpaceConfig};
    use crate::rng::{stream, SimRng};
    use crate::sim::generate_graph;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    fn two_node_rule() -> TransitionRule {
        ReparamPositive::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.25, 0.25]),
            dvector![0.25, 0.2],
        )
        .unwrap()
        .rule()
    }

    #[test]
    fn transition_prob_multiplies_node_factors() {
        let rule = two_node_rule();
        let zero = State::ZEROS;
        let ones = State::from_bits(&[true, true]);
        assert_abs_diff_eq!(transition_prob(&rule, zero, zero), 0.75 * 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(transition_prob(&rule, zero, ones), 0.25 * 0.2, epsilon = 1e-15);
    }

    #[test]
    fn rows_sum_to_one_for_random_parameters() {
        let config = SpaceConfig::with_defaults(4).unwrap();
        for signed in [false, true] {
            let spec = GraphSpec::new(4, 3, 0.1, signed).unwrap();
            for seed in 0..10 {
                let rule = generate_graph(&spec, &config, seed).unwrap().rule();
                for u in State::all(4) {
                    let total: f64 = State::all(4)
                        .map(|v| transition_prob(&rule, u, v))
                        .sum();
                    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_row_matches_pairwise_evaluation() {
        let rule = two_node_rule();
        for u in State::all(2) {
            let row = product_row(&rule.success_probs(u));
            for v in State::all(2) {
                assert_abs_diff_eq!(
                    row[v.value() as usize],
                    transition_prob(&rule, u, v),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn single_node_stationary_from_balance_equation() {
        let rep = ReparamPositive::new(DMatrix::from_row_slice(1, 1, &[0.5]), dvector![0.25])
            .unwrap();
        let chain = build_chain(&rep.rule()).unwrap();
        assert_abs_diff_eq!(chain.pi()[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(chain.pi()[1], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn independent_chain_has_product_stationary_law() {
        let c = dvector![0.3, 0.5, 0.7];
        let rep = ReparamPositive::new(DMatrix::zeros(3, 3), c.clone()).unwrap();
        let chain = build_chain(&rep.rule()).unwrap();
        for u in State::all(3) {
            let mut expected = 1.0;
            for i in 0..3 {
                expected *= if u.bit(i) { c[i] } else { 1.0 - c[i] };
            }
            assert_abs_diff_eq!(chain.pi()[u.value() as usize], expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn stationary_is_strictly_positive() {
        let config = SpaceConfig::with_defaults(5).unwrap();
        let spec = GraphSpec::new(5, 3, 0.1, true).unwrap();
        for seed in 0..5 {
            let rule = generate_graph(&spec, &config, seed).unwrap().rule();
            let chain = build_chain(&rule).unwrap();
            assert!(chain.pi().iter().all(|&x| x > 0.0));
            assert_abs_diff_eq!(chain.pi().sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn matrix_free_stationary_matches_dense() {
        let config = SpaceConfig::with_defaults(6).unwrap();
        let spec = GraphSpec::new(6, 3, 0.1, false).unwrap();
        let rule = generate_graph(&spec, &config, 4).unwrap().rule();
        let chain = build_chain(&rule).unwrap();
        let free = stationary_matrix_free(&rule).unwrap();
        assert_abs_diff_eq!(chain.pi(), &free, epsilon = 1e-9);
    }

    #[test]
    fn dense_chain_respects_the_size_cap() {
        let p = MAX_DENSE_P + 1;
        let rep =
            ReparamPositive::new(DMatrix::zeros(p, p), DVector::from_element(p, 0.5)).unwrap();
        assert!(matches!(build_chain(&rep.rule()), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn entropy_of_fair_coins() {
        let one = ReparamPositive::new(DMatrix::zeros(1, 1), dvector![0.5]).unwrap();
        let chain = build_chain(&one.rule()).unwrap();
        assert_abs_diff_eq!(entropy_rate(&chain), std::f64::consts::LN_2, epsilon = 1e-12);
        let two = ReparamPositive::new(DMatrix::zeros(2, 2), dvector![0.5, 0.5]).unwrap();
        let chain = build_chain(&two.rule()).unwrap();
        assert_abs_diff_eq!(entropy_rate(&chain), 2.0 * std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn empirical_row_from_hand_counts() {
        let counts = TransitionCounts::from_pairs(
            2,
            [((0, 1), 1), ((0, 2), 1), ((0, 0), 1), ((1, 0), 1), ((2, 0), 1)],
        )
        .unwrap();
        let row = empirical_row(&counts, State::ZEROS).unwrap();
        assert!(row.visited);
        let third = 1.0 / 3.0;
        assert_abs_diff_eq!(row.q, dvector![third, third, third, 0.0], epsilon = 1e-15);
        let unvisited = empirical_row(&counts, State::from_value(3, 2).unwrap()).unwrap();
        assert!(!unvisited.visited);
        assert_abs_diff_eq!(unvisited.q, dvector![0.25, 0.25, 0.25, 0.25], epsilon = 1e-15);
        assert_abs_diff_eq!(row.q.sum(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn divergences_on_hand_examples() {
        let q = dvector![1.0, 0.0];
        let p = dvector![0.5, 0.5];
        assert_abs_diff_eq!(
            kl_divergence(&q, &p).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(tv_distance(&q, &p), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(kl_divergence(&p, &p).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(
            kl_divergence(&dvector![0.5, 0.5], &dvector![1.0, 0.0]),
            Err(Error::InfiniteDivergence { index: 1 })
        ));
    }

    #[test]
    fn pinsker_inequality_on_random_pairs() {
        let mut rng = SimRng::new(99, stream::PARAMS);
        for _ in 0..1000 {
            let n = 2 + rng.index(6);
            let draw = |rng: &mut SimRng| {
                let mut v = DVector::from_fn(n, |_, _| rng.next_f64() + 1e-3);
                v /= v.sum();
                v
            };
            let q = draw(&mut rng);
            let p = draw(&mut rng);
            let kl = kl_divergence(&q, &p).unwrap();
            let tv = tv_distance(&q, &p);
            assert!(kl + 1e-15 >= 2.0 * tv * tv, "Pinsker violated: kl={kl}, tv={tv}");
        }
    }

    #[test]
    fn probe_is_zero_only_for_identical_laws() {
        let rule = two_node_rule();
        assert_eq!(identifiability_probe(&rule, &rule).unwrap(), 0.0);
        let a = ReparamPositive::new(DMatrix::zeros(1, 1), dvector![0.3]).unwrap().rule();
        let b = ReparamPositive::new(DMatrix::zeros(1, 1), dvector![0.4]).unwrap().rule();
        assert_abs_diff_eq!(identifiability_probe(&a, &b).unwrap(), 0.1, epsilon = 1e-12);
    }
}
