//! Parameter sets for Bernoulli autoregressive network processes.
//!
//! A process on `p` nodes is described per node `i` by nonnegative parent
//! weights, a noise weight `b[i]`, and a noise level `rho_w[i]`. In the
//! positive model the firing probability of node `i` given state `x` is
//! `a[i]·x + b[i]·rho_w[i]`; the generic model adds inhibitory weights on
//! the flipped state, `a[i]·x + a_tilde[i]·(1-x) + b[i]·rho_w[i]`, with
//! `a[i]` and `a_tilde[i]` supported on disjoint parent sets. Every row
//! satisfies the budget `sum(a[i]) + sum(a_tilde[i]) + b[i] = 1`, which
//! keeps all firing probabilities inside `(0, 1)`.
//!
//! Estimators work in two flatter coordinate systems re-exported here:
//! [`ReparamPositive`] carries `(A, c)` with `c = b ∘ rho_w`, and
//! [`ReparamSigned`] carries `(A_bar, c_bar)` with `A_bar = A - A_tilde`
//! and `c_bar = A_tilde·1 + b ∘ rho_w`. Both leave the per-node firing
//! probability affine in the state, which is what the likelihood and the
//! least-squares equations need.

mod project;

pub use project::{project_theta, project_theta_signed};
pub(crate) use project::{project_row_positive, project_row_relaxed, row_distance};

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::State;

/// Constraint-violation tolerance used by all feasibility checks.
pub(crate) const VALIDATION_TOL: f64 = 1e-12;

/// Largest `p` the integer state encoding supports.
pub const MAX_NODES: usize = 64;

pub const DEFAULT_B_MIN: f64 = 0.2;
pub const DEFAULT_RHO_MIN: f64 = 0.2;
pub const DEFAULT_RHO_MAX: f64 = 0.8;
pub const DEFAULT_A_MIN: f64 = 0.1;
pub const DEFAULT_C_THRESH: f64 = 0.5;

/// Dimensions and box bounds of the feasible parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub p: usize,
    pub b_min: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl SpaceConfig {
    pub fn new(p: usize, b_min: f64, rho_min: f64, rho_max: f64) -> Result<Self> {
        if p == 0 || p > MAX_NODES {
            return Err(Error::InvalidConfig(format!(
                "p must be in 1..={MAX_NODES}, got {p}"
            )));
        }
        if !(b_min > 0.0 && b_min < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "b_min must lie in (0, 1), got {b_min}"
            )));
        }
        if !(rho_min > 0.0 && rho_min < rho_max && rho_max < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < rho_min < rho_max < 1, got [{rho_min}, {rho_max}]"
            )));
        }
        Ok(Self { p, b_min, rho_min, rho_max })
    }

    /// Configuration with the default box bounds (`b_min = 0.2`,
    /// `rho_w` in `[0.2, 0.8]`).
    pub fn with_defaults(p: usize) -> Result<Self> {
        Self::new(p, DEFAULT_B_MIN, DEFAULT_RHO_MIN, DEFAULT_RHO_MAX)
    }
}

/// One violated constraint, reported by row so callers can pinpoint the
/// offending node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub row: usize,
    pub constraint: String,
}

/// Outcome of a feasibility check: empty means feasible.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, row: usize, constraint: impl Into<String>) {
        self.violations.push(Violation { row, constraint: constraint.into() });
    }

    /// Error if any violation was recorded.
    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidParams(self.to_string()))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let items: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("row {}: {}", v.row, v.constraint))
            .collect();
        write!(f, "{}", items.join("; "))
    }
}

fn check_dims_square(name: &str, m: &DMatrix<f64>, p: usize) -> Result<()> {
    if m.nrows() != p || m.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, expected {p}x{p}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_dims_vec(name: &str, v: &DVector<f64>, p: usize) -> Result<()> {
    if v.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{name} has length {}, expected {p}",
            v.len()
        )));
    }
    Ok(())
}

/// Positive-model parameters: nonnegative parent weights `a`, noise weights
/// `b`, and noise levels `rho_w`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarParams {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub rho_w: DVector<f64>,
}

impl BarParams {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, rho_w: DVector<f64>) -> Result<Self> {
        let p = b.len();
        check_dims_square("A", &a, p)?;
        check_dims_vec("rho_w", &rho_w, p)?;
        Ok(Self { a, b, rho_w })
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }

    /// Checks every feasible-set constraint; dimension mismatches against
    /// `config` are errors, constraint violations are reported per row.
    pub fn validate(&self, config: &SpaceConfig) -> Result<ValidationReport> {
        if self.p() != config.p {
            return Err(Error::DimensionMismatch(format!(
                "params have p = {}, config has p = {}",
                self.p(),
                config.p
            )));
        }
        let mut report = ValidationReport::default();
        for i in 0..self.p() {
            for j in 0..self.p() {
                if self.a[(i, j)] < -VALIDATION_TOL {
                    report.push(i, format!("a[{i}][{j}] >= 0"));
                }
            }
            let row_sum: f64 = self.a.row(i).sum() + self.b[i];
            if (row_sum - 1.0).abs() > VALIDATION_TOL {
                report.push(i, format!("sum(a[{i}]) + b[{i}] == 1 (got {row_sum})"));
            }
            if self.b[i] < config.b_min - VALIDATION_TOL {
                report.push(i, format!("b[{i}] >= b_min"));
            }
            if self.rho_w[i] < config.rho_min - VALIDATION_TOL
                || self.rho_w[i] > config.rho_max + VALIDATION_TOL
            {
                report.push(i, format!("rho_w[{i}] in [rho_min, rho_max]"));
            }
        }
        Ok(report)
    }

    /// `(A, c)` coordinates with `c = b ∘ rho_w`.
    pub fn to_reparam(&self) -> ReparamPositive {
        ReparamPositive {
            a: self.a.clone(),
            c: self.b.component_mul(&self.rho_w),
        }
    }

    /// Inverts [`BarParams::to_reparam`]: `b = 1 - A·1`, `rho_w = c / b`.
    /// The result is validated against `config`.
    pub fn from_reparam(rep: &ReparamPositive, config: &SpaceConfig) -> Result<Self> {
        let p = rep.p();
        let mut b = DVector::zeros(p);
        let mut rho_w = DVector::zeros(p);
        for i in 0..p {
            b[i] = 1.0 - rep.a.row(i).sum();
            if b[i].abs() < VALIDATION_TOL {
                return Err(Error::VanishingNoiseWeight { node: i });
            }
            rho_w[i] = rep.c[i] / b[i];
        }
        let params = Self::new(rep.a.clone(), b, rho_w)?;
        params.validate(config)?.into_result()?;
        Ok(params)
    }

    /// Firing-probability rule `x -> A x + c`.
    pub fn rule(&self) -> TransitionRule {
        let rep = self.to_reparam();
        TransitionRule { weights: rep.a, offsets: rep.c }
    }
}

/// Generic-model parameters: excitatory weights `a` on the state and
/// inhibitory weights `a_tilde` on the flipped state, with disjoint
/// supports.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericBarParams {
    pub a: DMatrix<f64>,
    pub a_tilde: DMatrix<f64>,
    pub b: DVector<f64>,
    pub rho_w: DVector<f64>,
}

impl GenericBarParams {
    pub fn new(
        a: DMatrix<f64>,
        a_tilde: DMatrix<f64>,
        b: DVector<f64>,
        rho_w: DVector<f64>,
    ) -> Result<Self> {
        let p = b.len();
        check_dims_square("A", &a, p)?;
        check_dims_square("A_tilde", &a_tilde, p)?;
        check_dims_vec("rho_w", &rho_w, p)?;
        Ok(Self { a, a_tilde, b, rho_w })
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self, config: &SpaceConfig) -> Result<ValidationReport> {
        if self.p() != config.p {
            return Err(Error::DimensionMismatch(format!(
                "params have p = {}, config has p = {}",
                self.p(),
                config.p
            )));
        }
        let mut report = ValidationReport::default();
        for i in 0..self.p() {
            for j in 0..self.p() {
                if self.a[(i, j)] < -VALIDATION_TOL {
                    report.push(i, format!("a[{i}][{j}] >= 0"));
                }
                if self.a_tilde[(i, j)] < -VALIDATION_TOL {
                    report.push(i, format!("a_tilde[{i}][{j}] >= 0"));
                }
                if (self.a[(i, j)] * self.a_tilde[(i, j)]).abs() > VALIDATION_TOL {
                    report.push(i, format!("a[{i}][{j}] * a_tilde[{i}][{j}] == 0"));
                }
            }
            let row_sum: f64 = self.a.row(i).sum() + self.a_tilde.row(i).sum() + self.b[i];
            if (row_sum - 1.0).abs() > VALIDATION_TOL {
                report.push(
                    i,
                    format!("sum(a[{i}]) + sum(a_tilde[{i}]) + b[{i}] == 1 (got {row_sum})"),
                );
            }
            if self.b[i] < config.b_min - VALIDATION_TOL {
                report.push(i, format!("b[{i}] >= b_min"));
            }
            if self.rho_w[i] < config.rho_min - VALIDATION_TOL
                || self.rho_w[i] > config.rho_max + VALIDATION_TOL
            {
                report.push(i, format!("rho_w[{i}] in [rho_min, rho_max]"));
            }
        }
        Ok(report)
    }

    /// `(A_bar, c_bar)` coordinates with `A_bar = A - A_tilde` and
    /// `c_bar = A_tilde·1 + b ∘ rho_w`.
    pub fn to_reparam_signed(&self) -> ReparamSigned {
        let p = self.p();
        let a_bar = &self.a - &self.a_tilde;
        let mut c_bar = DVector::zeros(p);
        for i in 0..p {
            c_bar[i] = self.a_tilde.row(i).sum() + self.b[i] * self.rho_w[i];
        }
        ReparamSigned { a_bar, c_bar }
    }

    /// Inverts [`GenericBarParams::to_reparam_signed`] by sign-splitting
    /// `A_bar`: `A = max(A_bar, 0)`, `A_tilde = max(-A_bar, 0)`,
    /// `b = 1 - (A + A_tilde)·1`, `rho_w = (c_bar - A_tilde·1) / b`. The
    /// result is validated against `config`.
    pub fn from_reparam_signed(rep: &ReparamSigned, config: &SpaceConfig) -> Result<Self> {
        let p = rep.p();
        let mut a = DMatrix::zeros(p, p);
        let mut a_tilde = DMatrix::zeros(p, p);
        let mut b = DVector::zeros(p);
        let mut rho_w = DVector::zeros(p);
        for i in 0..p {
            let mut abs_sum = 0.0;
            let mut neg_sum = 0.0;
            for j in 0..p {
                let v = rep.a_bar[(i, j)];
                if v >= 0.0 {
                    a[(i, j)] = v;
                } else {
                    a_tilde[(i, j)] = -v;
                    neg_sum += -v;
                }
                abs_sum += v.abs();
            }
            b[i] = 1.0 - abs_sum;
            if b[i].abs() < VALIDATION_TOL {
                return Err(Error::VanishingNoiseWeight { node: i });
            }
            rho_w[i] = (rep.c_bar[i] - neg_sum) / b[i];
        }
        let params = Self::new(a, a_tilde, b, rho_w)?;
        params.validate(config)?.into_result()?;
        Ok(params)
    }

    /// Firing-probability rule `x -> A_bar x + c_bar`.
    pub fn rule(&self) -> TransitionRule {
        let rep = self.to_reparam_signed();
        TransitionRule { weights: rep.a_bar, offsets: rep.c_bar }
    }
}

/// Either model variant, for pipelines that handle both.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams {
    Positive(BarParams),
    Generic(GenericBarParams),
}

impl ModelParams {
    pub fn p(&self) -> usize {
        match self {
            Self::Positive(params) => params.p(),
            Self::Generic(params) => params.p(),
        }
    }

    pub fn is_generic(&self) -> bool {
        matches!(self, Self::Generic(_))
    }

    pub fn validate(&self, config: &SpaceConfig) -> Result<ValidationReport> {
        match self {
            Self::Positive(params) => params.validate(config),
            Self::Generic(params) => params.validate(config),
        }
    }

    pub fn rule(&self) -> TransitionRule {
        match self {
            Self::Positive(params) => params.rule(),
            Self::Generic(params) => params.rule(),
        }
    }

    /// Excitatory weight matrix, shared by both variants.
    pub fn a(&self) -> &DMatrix<f64> {
        match self {
            Self::Positive(params) => &params.a,
            Self::Generic(params) => &params.a,
        }
    }

    /// Inhibitory weight matrix, present only on the generic variant.
    pub fn a_tilde(&self) -> Option<&DMatrix<f64>> {
        match self {
            Self::Positive(_) => None,
            Self::Generic(params) => Some(&params.a_tilde),
        }
    }

    pub fn b(&self) -> &DVector<f64> {
        match self {
            Self::Positive(params) => &params.b,
            Self::Generic(params) => &params.b,
        }
    }

    pub fn rho_w(&self) -> &DVector<f64> {
        match self {
            Self::Positive(params) => &params.rho_w,
            Self::Generic(params) => &params.rho_w,
        }
    }
}

/// Positive-model estimation coordinates `(A, c)`; the firing probability
/// of node `i` at state `x` is `a[i]·x + c[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReparamPositive {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl ReparamPositive {
    pub fn new(a: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        check_dims_square("A", &a, c.len())?;
        Ok(Self { a, c })
    }

    pub fn p(&self) -> usize {
        self.c.len()
    }

    /// Feasibility of the image of the positive model: `a >= 0`,
    /// `sum(a[i]) <= 1 - b_min`, and `c[i]` inside the noise band
    /// `[rho_min, rho_max] * (1 - sum(a[i]))`.
    pub fn validate(&self, config: &SpaceConfig) -> Result<ValidationReport> {
        if self.p() != config.p {
            return Err(Error::DimensionMismatch(format!(
                "reparam has p = {}, config has p = {}",
                self.p(),
                config.p
            )));
        }
        let mut report = ValidationReport::default();
        for i in 0..self.p() {
            for j in 0..self.p() {
                if self.a[(i, j)] < -VALIDATION_TOL {
                    report.push(i, format!("a[{i}][{j}] >= 0"));
                }
            }
            let row_sum: f64 = self.a.row(i).sum();
            if row_sum > 1.0 - config.b_min + VALIDATION_TOL {
                report.push(i, format!("sum(a[{i}]) <= 1 - b_min"));
            }
            let slack = 1.0 - row_sum;
            if self.c[i] < config.rho_min * slack - VALIDATION_TOL
                || self.c[i] > config.rho_max * slack + VALIDATION_TOL
            {
                report.push(i, format!("c[{i}] in noise band"));
            }
        }
        Ok(report)
    }

    pub fn rule(&self) -> TransitionRule {
        TransitionRule { weights: self.a.clone(), offsets: self.c.clone() }
    }
}

/// Generic-model estimation coordinates `(A_bar, c_bar)`; the firing
/// probability of node `i` at state `x` is `a_bar[i]·x + c_bar[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReparamSigned {
    pub a_bar: DMatrix<f64>,
    pub c_bar: DVector<f64>,
}

impl ReparamSigned {
    pub fn new(a_bar: DMatrix<f64>, c_bar: DVector<f64>) -> Result<Self> {
        check_dims_square("A_bar", &a_bar, c_bar.len())?;
        Ok(Self { a_bar, c_bar })
    }

    pub fn p(&self) -> usize {
        self.c_bar.len()
    }

    /// Feasibility of the image of the generic model:
    /// `sum(|a_bar[i]|) <= 1 - b_min` and `c_bar[i] - sum(max(-a_bar[i], 0))`
    /// inside `[rho_min, rho_max] * (1 - sum(|a_bar[i]|))`.
    pub fn validate(&self, config: &SpaceConfig) -> Result<ValidationReport> {
        if self.p() != config.p {
            return Err(Error::DimensionMismatch(format!(
                "reparam has p = {}, config has p = {}",
                self.p(),
                config.p
            )));
        }
        let mut report = ValidationReport::default();
        for i in 0..self.p() {
            let abs_sum: f64 = self.a_bar.row(i).iter().map(|v| v.abs()).sum();
            let neg_sum: f64 = self.a_bar.row(i).iter().map(|v| (-v).max(0.0)).sum();
            if abs_sum > 1.0 - config.b_min + VALIDATION_TOL {
                report.push(i, format!("sum(|a_bar[{i}]|) <= 1 - b_min"));
            }
            let slack = 1.0 - abs_sum;
            let noise = self.c_bar[i] - neg_sum;
            if noise < config.rho_min * slack - VALIDATION_TOL
                || noise > config.rho_max * slack + VALIDATION_TOL
            {
                report.push(i, format!("c_bar[{i}] in noise band"));
            }
        }
        Ok(report)
    }

    pub fn rule(&self) -> TransitionRule {
        TransitionRule { weights: self.a_bar.clone(), offsets: self.c_bar.clone() }
    }
}

/// Per-node firing-probability rule `q(x) = W x + offset`, the common
/// affine form behind both model variants. Simulation and exact analysis
/// only need this.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRule {
    weights: DMatrix<f64>,
    offsets: DVector<f64>,
}

impl TransitionRule {
    pub fn new(weights: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self> {
        check_dims_square("weights", &weights, offsets.len())?;
        Ok(Self { weights, offsets })
    }

    pub fn p(&self) -> usize {
        self.offsets.len()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    /// Vector of per-node firing probabilities at `state`.
    pub fn success_probs(&self, state: State) -> DVector<f64> {
        let mut probs = self.offsets.clone();
        for j in 0..self.p() {
            if state.bit(j) {
                for i in 0..self.p() {
                    probs[i] += self.weights[(i, j)];
                }
            }
        }
        probs
    }

    /// Firing probability of a single node at `state`.
    pub fn success_prob(&self, node: usize, state: State) -> f64 {
        let mut prob = self.offsets[node];
        for j in 0..self.p() {
            if state.bit(j) {
                prob += self.weights[(node, j)];
            }
        }
        prob
    }

    /// Range all firing probabilities can reach over the whole state space.
    pub fn prob_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.p() {
            let mut min = self.offsets[i];
            let mut max = self.offsets[i];
            for j in 0..self.p() {
                let w = self.weights[(i, j)];
                if w < 0.0 {
                    min += w;
                } else {
                    max += w;
                }
            }
            lo = lo.min(min);
            hi = hi.max(max);
        }
        (lo, hi)
    }
}

/// Directed-graph drawing instructions for random ground-truth networks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub p: usize,
    pub d_max: usize,
    pub a_min: f64,
    pub signed: bool,
}

impl GraphSpec {
    pub fn new(p: usize, d_max: usize, a_min: f64, signed: bool) -> Result<Self> {
        if p == 0 || p > MAX_NODES {
            return Err(Error::InvalidConfig(format!(
                "p must be in 1..={MAX_NODES}, got {p}"
            )));
        }
        if d_max == 0 || d_max > p {
            return Err(Error::InvalidConfig(format!(
                "d_max must be in 1..=p, got {d_max} with p = {p}"
            )));
        }
        if a_min <= 0.0 {
            return Err(Error::InvalidConfig(format!("a_min must be positive, got {a_min}")));
        }
        Ok(Self { p, d_max, a_min, signed })
    }

    /// A maximum-degree row must fit its weight budget: `d_max * a_min`
    /// may not exceed `1 - b_min`.
    pub fn check_against(&self, config: &SpaceConfig) -> Result<()> {
        if self.p != config.p {
            return Err(Error::DimensionMismatch(format!(
                "graph spec has p = {}, config has p = {}",
                self.p, config.p
            )));
        }
        if self.d_max as f64 * self.a_min > 1.0 - config.b_min + VALIDATION_TOL {
            return Err(Error::InvalidConfig(format!(
                "d_max * a_min = {} exceeds the weight budget 1 - b_min = {}",
                self.d_max as f64 * self.a_min,
                1.0 - config.b_min
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct ConfigSection {
    b_min: f64,
    rho_min: f64,
    rho_max: f64,
}

/// JSON wire format for a parameter set: matrices as row-major nested
/// arrays, `A_tilde` present exactly when the parameters are generic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub p: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "A_tilde", default, skip_serializing_if = "Option::is_none")]
    pub a_tilde: Option<Vec<Vec<f64>>>,
    pub b: Vec<f64>,
    pub rho_w: Vec<f64>,
    config: ConfigSection,
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>], p: usize) -> Result<DMatrix<f64>> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be a {p}x{p} nested array"
        )));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

impl ParamsFile {
    pub fn from_params(params: &ModelParams, config: &SpaceConfig) -> Self {
        Self {
            p: params.p(),
            a: matrix_to_rows(params.a()),
            a_tilde: params.a_tilde().map(matrix_to_rows),
            b: params.b().iter().copied().collect(),
            rho_w: params.rho_w().iter().copied().collect(),
            config: ConfigSection {
                b_min: config.b_min,
                rho_min: config.rho_min,
                rho_max: config.rho_max,
            },
        }
    }

    /// Decodes and validates the parameter set and its configuration.
    pub fn into_params(&self) -> Result<(ModelParams, SpaceConfig)> {
        let config = SpaceConfig::new(
            self.p,
            self.config.b_min,
            self.config.rho_min,
            self.config.rho_max,
        )?;
        let a = rows_to_matrix("A", &self.a, self.p)?;
        let b = DVector::from_vec(self.b.clone());
        let rho_w = DVector::from_vec(self.rho_w.clone());
        check_dims_vec("b", &b, self.p)?;
        let params = match &self.a_tilde {
            Some(rows) => {
                let a_tilde = rows_to_matrix("A_tilde", rows, self.p)?;
                ModelParams::Generic(GenericBarParams::new(a, a_tilde, b, rho_w)?)
            }
            None => ModelParams::Positive(BarParams::new(a, b, rho_w)?),
        };
        params.validate(&config)?.into_result()?;
        Ok((params, config))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
