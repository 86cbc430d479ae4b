//! Trajectory simulation for Bernoulli autoregressive processes.
//!
//! Given the current state, every node fires independently with the
//! probability supplied by a [`TransitionRule`]; the exogenous noise is
//! already marginalized into that rule, which is distributionally
//! identical to sampling the noise explicitly and cheaper. Each step
//! consumes exactly `p` uniform draws in node order, so trajectories are
//! reproducible bit for bit from a seed.

mod graph;
mod trajectory;

pub use graph::generate_graph;
pub use trajectory::Trajectory;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{TransitionRule, MAX_NODES};
use crate::rng::{stream, SimRng};

/// One configuration of the `p` binary nodes, packed into an integer:
/// node `i` occupies the `2^i` digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(u64);

impl State {
    pub const ZEROS: State = State(0);

    fn mask(p: usize) -> u64 {
        if p == 64 {
            u64::MAX
        } else {
            (1u64 << p) - 1
        }
    }

    /// Wraps an integer encoding, checking it fits in `p` bits.
    pub fn from_value(value: u64, p: usize) -> Result<Self> {
        if p == 0 || p > MAX_NODES {
            return Err(Error::InvalidConfig(format!(
                "p must be in 1..={MAX_NODES}, got {p}"
            )));
        }
        if value & !Self::mask(p) != 0 {
            return Err(Error::InvalidConfig(format!(
                "state {value} does not fit in {p} bits"
            )));
        }
        Ok(Self(value))
    }

    /// Builds a state from per-node activities in node order.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut value = 0u64;
        for (i, &on) in bits.iter().enumerate() {
            if on {
                value |= 1 << i;
            }
        }
        Self(value)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn bit(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    /// The state as a 0/1 vector, for affine arithmetic.
    pub fn to_vector(self, p: usize) -> DVector<f64> {
        DVector::from_fn(p, |i, _| if self.bit(i) { 1.0 } else { 0.0 })
    }

    /// All `2^p` states in ascending integer order. Panics beyond the
    /// enumerable range.
    pub fn all(p: usize) -> impl Iterator<Item = State> {
        assert!(p < 64, "cannot enumerate 2^{p} states");
        (0..(1u64 << p)).map(State)
    }
}

/// Law of the chain's first state.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialDistribution {
    PointMass(State),
    Uniform,
    /// Independent per-node firing probabilities, in node order.
    ProductBernoulli(DVector<f64>),
}

impl InitialDistribution {
    fn sample(&self, p: usize, rng: &mut SimRng) -> State {
        match self {
            Self::PointMass(state) => *state,
            Self::Uniform => State(rng.next_u64() & State::mask(p)),
            Self::ProductBernoulli(q) => {
                assert_eq!(q.len(), p, "initial distribution dimension mismatch");
                let bits: Vec<bool> = (0..p).map(|i| rng.bernoulli(q[i])).collect();
                State::from_bits(&bits)
            }
        }
    }
}

/// Draws the successor of `state`: bit `i` is set with probability
/// `rule.success_prob(i, state)`, consuming exactly `p` uniform draws in
/// node order.
pub fn step(rule: &TransitionRule, state: State, rng: &mut SimRng) -> State {
    let probs = rule.success_probs(state);
    let mut value = 0u64;
    for i in 0..rule.p() {
        if rng.bernoulli(probs[i]) {
            value |= 1 << i;
        }
    }
    State(value)
}

/// Samples a trajectory of `t` transitions (`t + 1` states), deterministic
/// in `seed`.
pub fn simulate(
    rule: &TransitionRule,
    t: usize,
    initial: &InitialDistribution,
    seed: u64,
) -> Trajectory {
    let mut rng = SimRng::new(seed, stream::SIMULATION);
    let p = rule.p();
    let mut states = Vec::with_capacity(t + 1);
    let mut current = initial.sample(p, &mut rng);
    states.push(current);
    for _ in 0..t {
        current = step(rule, current, &mut rng);
        states.push(current);
    }
    Trajectory::new(p, states).expect("simulated states are valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GenericBarParams, ReparamPositive, SpaceConfig};
    use approx::assert_abs_diff_eq;
    use nalgebra::{dvector, DMatrix, DVector};

    #[test]
    fn state_encoding_uses_low_bits_first() {
        let s = State::from_bits(&[true, false, true]);
        assert_eq!(s.value(), 0b101);
        assert!(s.bit(0));
        assert!(!s.bit(1));
        assert!(s.bit(2));
        assert_eq!(s.to_vector(3), dvector![1.0, 0.0, 1.0]);
    }

    #[test]
    fn state_rejects_out_of_range_values() {
        assert!(State::from_value(4, 2).is_err());
        assert!(State::from_value(3, 2).is_ok());
    }

    #[test]
    fn success_probs_match_affine_evaluation() {
        let rep = ReparamPositive::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.25, 0.25]),
            dvector![0.25, 0.2],
        )
        .unwrap();
        let rule = rep.rule();
        let at_zero = rule.success_probs(State::from_bits(&[false, false]));
        assert_abs_diff_eq!(at_zero, dvector![0.25, 0.2], epsilon = 1e-15);
        let at_ones = rule.success_probs(State::from_bits(&[true, true]));
        assert_abs_diff_eq!(at_ones, dvector![0.75, 0.7], epsilon = 1e-15);
    }

    #[test]
    fn signed_success_prob_subtracts_inhibitory_weight() {
        let params = GenericBarParams::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.0, 0.0]),
            dvector![0.3, 1.0],
            dvector![0.5, 0.5],
        )
        .unwrap();
        let rule = params.rule();
        // a_bar, c_bar for node 1: [0.5, -0.2], 0.2 + 0.15 = 0.35; at
        // x = (0, 1) the firing probability is -0.2 + 0.35 = 0.15.
        let prob = rule.success_prob(0, State::from_bits(&[false, true]));
        assert_abs_diff_eq!(prob, 0.15, epsilon = 1e-15);
    }

    #[test]
    fn step_is_deterministic_in_the_seed() {
        let config = SpaceConfig::with_defaults(3).unwrap();
        let spec = crate::model::GraphSpec::new(3, 2, 0.1, false).unwrap();
        let params = generate_graph(&spec, &config, 9).unwrap();
        let rule = params.rule();
        let state = State::from_bits(&[true, false, true]);
        let a = step(&rule, state, &mut SimRng::new(5, stream::SIMULATION));
        let b = step(&rule, state, &mut SimRng::new(5, stream::SIMULATION));
        assert_eq!(a, b);
    }

    #[test]
    fn step_marginals_match_noise_level() {
        // With A = 0 each node is an independent Bernoulli(rho); the
        // empirical mean over 10^5 steps stays within 3 sigma ~ 0.005.
        let p = 2;
        let rho = 0.5;
        let rep = ReparamPositive::new(DMatrix::zeros(p, p), DVector::from_element(p, rho))
            .unwrap();
        let rule = rep.rule();
        let mut rng = SimRng::new(2024, stream::SIMULATION);
        let mut ones = vec![0u64; p];
        let n = 100_000;
        let mut state = State::ZEROS;
        for _ in 0..n {
            state = step(&rule, state, &mut rng);
            for (i, count) in ones.iter_mut().enumerate() {
                if state.bit(i) {
                    *count += 1;
                }
            }
        }
        for count in ones {
            let freq = count as f64 / n as f64;
            assert!((freq - rho).abs() < 0.01, "empirical {freq} vs rho {rho}");
        }
    }

    #[test]
    fn simulate_with_zero_transitions_has_one_state() {
        let rep = ReparamPositive::new(DMatrix::zeros(1, 1), dvector![0.5]).unwrap();
        let traj = simulate(&rep.rule(), 0, &InitialDistribution::Uniform, 1);
        assert_eq!(traj.states().len(), 1);
        assert_eq!(traj.t(), 0);
    }

    #[test]
    fn point_mass_initial_always_starts_there() {
        let rep = ReparamPositive::new(DMatrix::zeros(2, 2), dvector![0.5, 0.5]).unwrap();
        for seed in 0..20 {
            let traj = simulate(
                &rep.rule(),
                3,
                &InitialDistribution::PointMass(State::ZEROS),
                seed,
            );
            assert_eq!(traj.states()[0], State::ZEROS);
        }
    }

    #[test]
    fn simulate_is_reproducible() {
        let config = SpaceConfig::with_defaults(4).unwrap();
        let spec = crate::model::GraphSpec::new(4, 2, 0.1, false).unwrap();
        let params = generate_graph(&spec, &config, 3).unwrap();
        let rule = params.rule();
        let a = simulate(&rule, 500, &InitialDistribution::Uniform, 77);
        let b = simulate(&rule, 500, &InitialDistribution::Uniform, 77);
        assert_eq!(a.states(), b.states());
    }

    #[test]
    fn firing_probabilities_stay_inside_their_box() {
        let config = SpaceConfig::with_defaults(6).unwrap();
        let lo = config.b_min * config.rho_min;
        let hi = 1.0 - config.b_min * (1.0 - config.rho_max);
        for seed in 0..10 {
            for signed in [false, true] {
                let spec = crate::model::GraphSpec::new(6, 3, 0.1, signed).unwrap();
                let params = generate_graph(&spec, &config, seed).unwrap();
                let rule = params.rule();
                for state in State::all(6) {
                    let probs = rule.success_probs(state);
                    for i in 0..6 {
                        assert!(
                            probs[i] >= lo - 1e-12 && probs[i] <= hi + 1e-12,
                            "prob {} outside [{lo}, {hi}]",
                            probs[i]
                        );
                    }
                }
            }
        }
    }
}
