//! Sufficient statistics of a trajectory.
//!
//! Everything the estimators need is in the transition counts: `N_uv`
//! counts one-step transitions from state `u` to `v`, `N_u` the visits to
//! `u` over `k < T`, and `N_{u,r,1}` the visits to `u` followed by node
//! `r` firing. The design matrix stacks the distinct visited states as
//! 0/1 rows together with the per-node empirical firing frequencies; the
//! closed-form estimators are least squares on exactly that system.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::MAX_NODES;
use crate::sim::{State, Trajectory};

/// Sparse transition counts. Maps are keyed by the integer state encoding
/// and ordered, so iteration is deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionCounts {
    p: usize,
    t: u64,
    pairs: BTreeMap<(u64, u64), u64>,
    visits: BTreeMap<u64, u64>,
    /// Per visited state, `N_{u,r,1}` for each node `r`; the `l = 0`
    /// counts follow from `N_{u,r,0} = N_u - N_{u,r,1}`.
    ones: BTreeMap<u64, Vec<u64>>,
}

impl TransitionCounts {
    /// Builds counts from explicit `(u, v) -> N_uv` pairs; visits and
    /// marginals are derived, so the count identities hold by
    /// construction. An empty map is allowed and represents `T = 0`.
    pub fn from_pairs(p: usize, pairs: impl IntoIterator<Item = ((u64, u64), u64)>) -> Result<Self> {
        if p == 0 || p > MAX_NODES {
            return Err(Error::InvalidConfig(format!(
                "p must be in 1..={MAX_NODES}, got {p}"
            )));
        }
        let mut map = BTreeMap::new();
        for ((u, v), n) in pairs {
            State::from_value(u, p)?;
            State::from_value(v, p)?;
            if n == 0 {
                continue;
            }
            *map.entry((u, v)).or_insert(0) += n;
        }
        let mut visits = BTreeMap::new();
        let mut ones: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        let mut t = 0u64;
        for (&(u, v), &n) in &map {
            t += n;
            *visits.entry(u).or_insert(0) += n;
            let row = ones.entry(u).or_insert_with(|| vec![0; p]);
            for (r, slot) in row.iter_mut().enumerate() {
                if (v >> r) & 1 == 1 {
                    *slot += n;
                }
            }
        }
        Ok(Self { p, t, pairs: map, visits, ones })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of counted transitions.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn pair_count(&self, u: State, v: State) -> u64 {
        self.pairs.get(&(u.value(), v.value())).copied().unwrap_or(0)
    }

    pub fn visit_count(&self, u: State) -> u64 {
        self.visits.get(&u.value()).copied().unwrap_or(0)
    }

    /// `N_{u,r,l}`: visits to `u` after which node `r` held value `l`.
    pub fn marginal_count(&self, u: State, r: usize, l: bool) -> u64 {
        let one = self
            .ones
            .get(&u.value())
            .map(|row| row[r])
            .unwrap_or(0);
        if l {
            one
        } else {
            self.visit_count(u) - one
        }
    }

    /// Distinct visited states in ascending integer order.
    pub fn visited_states(&self) -> impl Iterator<Item = State> + '_ {
        self.visits.keys().map(move |&u| State::from_value(u, self.p).unwrap())
    }

    pub fn num_visited(&self) -> usize {
        self.visits.len()
    }

    /// `(u, v, N_uv)` in ascending `(u, v)` order.
    pub fn pair_counts(&self) -> impl Iterator<Item = (State, State, u64)> + '_ {
        self.pairs.iter().map(move |(&(u, v), &n)| {
            (
                State::from_value(u, self.p).unwrap(),
                State::from_value(v, self.p).unwrap(),
                n,
            )
        })
    }

    /// CSV rows `u,v,count` in ascending `(u, v)` order, with header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "u,v,count")?;
        for (&(u, v), &n) in &self.pairs {
            writeln!(out, "{u},{v},{n}")?;
        }
        Ok(())
    }
}

/// Tallies the transitions of a trajectory.
pub fn count_transitions(traj: &Trajectory) -> Result<TransitionCounts> {
    if traj.t() == 0 {
        return Err(Error::NoTransitions);
    }
    let mut pairs: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for window in traj.states().windows(2) {
        *pairs.entry((window[0].value(), window[1].value())).or_insert(0) += 1;
    }
    TransitionCounts::from_pairs(traj.p(), pairs)
}

/// Regression design built from the distinct visited states.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    /// `m x p` matrix of visited states as 0/1 rows, ascending encoding.
    pub u_m: DMatrix<f64>,
    /// `m x p` matrix whose column `r` holds the empirical firing
    /// frequencies `N_{u,r,1} / N_u` of node `r`, rows aligned with `u_m`.
    pub y: DMatrix<f64>,
    /// Visited states in row order.
    pub states: Vec<State>,
    /// Column rank of `u_m` (singular values above 1e-10).
    pub rank: usize,
    pub full_rank: bool,
}

/// Rank-detection threshold for the design matrix.
pub const RANK_TOL: f64 = 1e-10;

impl DesignMatrix {
    pub fn m(&self) -> usize {
        self.states.len()
    }

    /// Empirical firing frequencies of node `r`, aligned with the rows.
    pub fn y_column(&self, r: usize) -> DVector<f64> {
        self.y.column(r).into_owned()
    }
}

/// Builds the least-squares design from transition counts.
pub fn build_design(counts: &TransitionCounts) -> DesignMatrix {
    let p = counts.p();
    let states: Vec<State> = counts.visited_states().collect();
    let m = states.len();
    let u_m = DMatrix::from_fn(m, p, |k, j| if states[k].bit(j) { 1.0 } else { 0.0 });
    let y = DMatrix::from_fn(m, p, |k, r| {
        counts.marginal_count(states[k], r, true) as f64 / counts.visit_count(states[k]) as f64
    });
    let rank = if m == 0 {
        0
    } else {
        u_m.clone().svd(false, false).rank(RANK_TOL)
    };
    DesignMatrix { u_m, y, states, rank, full_rank: rank == p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trajectory_from_values(p: usize, values: &[u64]) -> Trajectory {
        let states = values
            .iter()
            .map(|&v| State::from_value(v, p).unwrap())
            .collect();
        Trajectory::new(p, states).unwrap()
    }

    /// The worked two-node example: states 00, 10, 00, 01, 00, 00 in node
    /// order, i.e. integer encodings 0, 1, 0, 2, 0, 0.
    fn worked_example() -> TransitionCounts {
        count_transitions(&trajectory_from_values(2, &[0, 1, 0, 2, 0, 0])).unwrap()
    }

    #[test]
    fn hand_counted_example_matches() {
        let counts = worked_example();
        let s = |v| State::from_value(v, 2).unwrap();
        assert_eq!(counts.t(), 5);
        assert_eq!(counts.visit_count(s(0)), 3);
        assert_eq!(counts.visit_count(s(1)), 1);
        assert_eq!(counts.visit_count(s(2)), 1);
        assert_eq!(counts.pair_count(s(0), s(1)), 1);
        assert_eq!(counts.pair_count(s(0), s(2)), 1);
        assert_eq!(counts.pair_count(s(0), s(0)), 1);
        assert_eq!(counts.pair_count(s(1), s(0)), 1);
        assert_eq!(counts.pair_count(s(2), s(0)), 1);
        assert_eq!(counts.marginal_count(s(0), 0, true), 1);
        assert_eq!(counts.marginal_count(s(0), 1, true), 1);
        assert_eq!(counts.marginal_count(s(0), 0, false), 2);
    }

    #[test]
    fn constant_zero_trajectory_counts() {
        let counts = count_transitions(&trajectory_from_values(2, &[0; 6])).unwrap();
        let zero = State::ZEROS;
        assert_eq!(counts.visit_count(zero), 5);
        assert_eq!(counts.pair_count(zero, zero), 5);
        for r in 0..2 {
            assert_eq!(counts.marginal_count(zero, r, true), 0);
            assert_eq!(counts.marginal_count(zero, r, false), 5);
        }
    }

    #[test]
    fn zero_transitions_is_an_error() {
        let traj = trajectory_from_values(2, &[3]);
        assert!(matches!(count_transitions(&traj), Err(Error::NoTransitions)));
    }

    #[test]
    fn count_identities_hold_on_simulated_data() {
        use crate::model::{GraphSpec, SpaceConfig};
        use crate::sim::{generate_graph, simulate, InitialDistribution};
        let config = SpaceConfig::with_defaults(4).unwrap();
        let spec = GraphSpec::new(4, 2, 0.1, false).unwrap();
        for seed in 0..5 {
            let params = generate_graph(&spec, &config, seed).unwrap();
            let traj = simulate(&params.rule(), 2000, &InitialDistribution::Uniform, seed);
            let counts = count_transitions(&traj).unwrap();
            assert_eq!(counts.t(), 2000);
            let mut total = 0;
            for u in counts.visited_states().collect::<Vec<_>>() {
                let n_u = counts.visit_count(u);
                total += n_u;
                let outgoing: u64 = State::all(4).map(|v| counts.pair_count(u, v)).sum();
                assert_eq!(outgoing, n_u);
                for r in 0..4 {
                    assert_eq!(
                        counts.marginal_count(u, r, false) + counts.marginal_count(u, r, true),
                        n_u
                    );
                }
            }
            assert_eq!(total, 2000);
        }
    }

    #[test]
    fn sparse_and_dense_recounts_agree() {
        use crate::model::{GraphSpec, SpaceConfig};
        use crate::sim::{generate_graph, simulate, InitialDistribution};
        let config = SpaceConfig::with_defaults(3).unwrap();
        let spec = GraphSpec::new(3, 2, 0.1, false).unwrap();
        let params = generate_graph(&spec, &config, 7).unwrap();
        let traj = simulate(&params.rule(), 1500, &InitialDistribution::Uniform, 7);
        let counts = count_transitions(&traj).unwrap();
        let mut dense = vec![[0u64; 8]; 8];
        for window in traj.states().windows(2) {
            dense[window[0].value() as usize][window[1].value() as usize] += 1;
        }
        for u in State::all(3) {
            for v in State::all(3) {
                assert_eq!(counts.pair_count(u, v), dense[u.value() as usize][v.value() as usize]);
            }
        }
    }

    #[test]
    fn design_from_worked_example() {
        let design = build_design(&worked_example());
        assert_eq!(design.m(), 3);
        let expected_u = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(design.u_m, expected_u);
        let y0 = design.y_column(0);
        assert_abs_diff_eq!(y0, nalgebra::dvector![1.0 / 3.0, 0.0, 0.0], epsilon = 1e-15);
        assert!(design.full_rank);
        assert_eq!(design.rank, 2);
    }

    #[test]
    fn single_state_design_is_rank_deficient() {
        let counts = count_transitions(&trajectory_from_values(2, &[0; 4])).unwrap();
        let design = build_design(&counts);
        assert_eq!(design.m(), 1);
        assert!(!design.full_rank);
        assert_eq!(design.rank, 0);
    }

    #[test]
    fn full_visit_gram_matrix_for_two_nodes() {
        // A trajectory visiting all four states once each, then returning
        // to zero so every state is visited as a source.
        let counts = count_transitions(&trajectory_from_values(2, &[0, 1, 2, 3, 0])).unwrap();
        let design = build_design(&counts);
        assert_eq!(design.m(), 4);
        let gram = design.u_m.transpose() * &design.u_m;
        assert_eq!(gram, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
    }

    #[test]
    fn full_state_gram_identity_in_integer_arithmetic() {
        for p in [2usize, 3, 4] {
            let n = 1usize << p;
            let mut gram = vec![vec![0i64; p]; p];
            for u in 0..n as u64 {
                for i in 0..p {
                    for j in 0..p {
                        if (u >> i) & 1 == 1 && (u >> j) & 1 == 1 {
                            gram[i][j] += 1;
                        }
                    }
                }
            }
            let scale = 1i64 << (p - 2);
            for i in 0..p {
                for j in 0..p {
                    let expected = scale * if i == j { 2 } else { 1 };
                    assert_eq!(gram[i][j], expected, "p={p}, entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn csv_export_lists_pairs_in_order() {
        let counts = worked_example();
        let mut buf = Vec::new();
        counts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "u,v,count");
        assert_eq!(lines[1], "0,0,1");
        assert_eq!(lines[2], "0,1,1");
        assert_eq!(lines[3], "0,2,1");
        assert_eq!(lines[4], "1,0,1");
        assert_eq!(lines[5], "2,0,1");
    }

    #[test]
    fn from_pairs_accepts_empty_counts() {
        let counts = TransitionCounts::from_pairs(3, []).unwrap();
        assert_eq!(counts.t(), 0);
        assert_eq!(counts.num_visited(), 0);
        let design = build_design(&counts);
        assert_eq!(design.m(), 0);
        assert!(!design.full_rank);
    }
}
