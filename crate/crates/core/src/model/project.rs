//! Euclidean projection onto the feasible parameter sets.
//!
//! Both feasible sets decompose per row. A positive row `(a_i, c_i)` must
//! satisfy `a_i >= 0`, `sum(a_i) <= 1 - b_min`, and the noise band
//! `rho_min (1 - sum(a_i)) <= c_i <= rho_max (1 - sum(a_i))`; every
//! constraint is a half-space or an orthant, so the row projection is
//! computed by cyclic projections with Dykstra's correction, which
//! converges to the exact Euclidean projection rather than merely a
//! feasible point.
//!
//! The signed set has `|.|` and `max(-., 0)` terms that make it a union of
//! convex orthant slices. The projection is therefore defined per sign
//! pattern: entries are reflected into the nonnegative orthant of their
//! pattern, projected there, and reflected back, so the output's sign
//! split always matches the pattern.

use nalgebra::{DMatrix, DVector};

use super::{ReparamPositive, ReparamSigned, SpaceConfig};

/// Cycle-displacement threshold at which the alternating projections stop.
const DISPLACEMENT_TOL: f64 = 1e-10;
const MAX_CYCLES: usize = 200_000;

trait ConvexSet {
    fn project(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// `x[j] >= 0` for `j < dim`; remaining coordinates free.
struct Orthant {
    dim: usize,
}

impl ConvexSet for Orthant {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = x.clone();
        for j in 0..self.dim {
            if y[j] < 0.0 {
                y[j] = 0.0;
            }
        }
        y
    }
}

/// `normal · x <= offset`.
struct HalfSpace {
    normal: DVector<f64>,
    offset: f64,
    norm_sq: f64,
}

impl HalfSpace {
    fn new(normal: DVector<f64>, offset: f64) -> Self {
        let norm_sq = normal.norm_squared();
        Self { normal, offset, norm_sq }
    }
}

impl ConvexSet for HalfSpace {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let excess = self.normal.dot(x) - self.offset;
        if excess <= 0.0 {
            x.clone()
        } else {
            x - &self.normal * (excess / self.norm_sq)
        }
    }
}

/// `sum(|x[j]|) <= radius` for `j < dim`; remaining coordinates free.
struct L1Ball {
    dim: usize,
    radius: f64,
}

impl ConvexSet for L1Ball {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let abs_sum: f64 = (0..self.dim).map(|j| x[j].abs()).sum();
        if abs_sum <= self.radius {
            return x.clone();
        }
        let mut mags: Vec<f64> = (0..self.dim).map(|j| x[j].abs()).collect();
        mags.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        let mut cumulative = 0.0;
        let mut threshold = 0.0;
        for (k, &mag) in mags.iter().enumerate() {
            cumulative += mag;
            let candidate = (cumulative - self.radius) / (k + 1) as f64;
            if candidate >= mag {
                break;
            }
            threshold = candidate;
        }
        let mut y = x.clone();
        for j in 0..self.dim {
            y[j] = x[j].signum() * (x[j].abs() - threshold).max(0.0);
        }
        y
    }
}

/// `x[dim] >= rho_min + sum_j phi(x[j])` with
/// `phi(t) = -rho_min t` for `t >= 0` and `phi(t) = -(1 - rho_min) t`
/// for `t < 0`. This is the lower noise-band constraint of the signed
/// relaxation, `c_bar - sum(max(-a_bar, 0)) >= rho_min (1 - sum(|a_bar|))`.
struct LowerBand {
    dim: usize,
    rho_min: f64,
}

impl LowerBand {
    fn phi(&self, t: f64) -> f64 {
        if t >= 0.0 {
            -self.rho_min * t
        } else {
            -(1.0 - self.rho_min) * t
        }
    }

    fn slack(&self, x: &DVector<f64>) -> f64 {
        x[self.dim] - self.rho_min - (0..self.dim).map(|j| self.phi(x[j])).sum::<f64>()
    }

    /// Weight coordinates of the projection for multiplier `lambda`.
    fn weights_at(&self, x: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let mut y = x.clone();
        for j in 0..self.dim {
            let neg = x[j] + lambda * (1.0 - self.rho_min);
            let pos = x[j] + lambda * self.rho_min;
            y[j] = if neg < 0.0 {
                neg
            } else if pos > 0.0 {
                pos
            } else {
                0.0
            };
        }
        y[self.dim] = x[self.dim] + lambda;
        y
    }
}

impl ConvexSet for LowerBand {
    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.slack(x) >= 0.0 {
            return x.clone();
        }
        // KKT stationarity pins the projection to a one-parameter family
        // in the multiplier; the constraint slack is increasing in it with
        // slope >= 1, so bisection finds the root.
        let mut lo = 0.0;
        let mut hi = (-self.slack(x)).max(1.0) + 1.0;
        debug_assert!(self.slack(&self.weights_at(x, hi)) >= 0.0);
        for _ in 0..128 {
            let mid = 0.5 * (lo + hi);
            if self.slack(&self.weights_at(x, mid)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.weights_at(x, hi)
    }
}

/// Dykstra's cyclic projection algorithm: converges to the Euclidean
/// projection of `x0` onto the intersection of the sets.
fn dykstra(x0: &DVector<f64>, sets: &[&dyn ConvexSet]) -> DVector<f64> {
    let mut x = x0.clone();
    let mut corrections: Vec<DVector<f64>> = sets.iter().map(|_| DVector::zeros(x0.len())).collect();
    for _ in 0..MAX_CYCLES {
        let cycle_start = x.clone();
        for (set, correction) in sets.iter().zip(corrections.iter_mut()) {
            let shifted = &x + &*correction;
            let projected = set.project(&shifted);
            *correction = shifted - &projected;
            x = projected;
        }
        if (&x - &cycle_start).norm() <= DISPLACEMENT_TOL {
            break;
        }
    }
    x
}

/// Dykstra stops on displacement, which can leave constraint violations
/// of comparable size; downstream validation checks at a tighter
/// tolerance, so the result is snapped exactly onto the polyhedron.
/// `negated[j]` marks coordinates feeding the `max(-a_bar, 0)` term of
/// the noise band (empty slice for the positive model).
fn snap_row(x: &mut DVector<f64>, negated: &[bool], config: &SpaceConfig) {
    let k = x.len() - 1;
    for j in 0..k {
        if x[j] < 0.0 {
            x[j] = 0.0;
        }
    }
    let cap = 1.0 - config.b_min;
    let total: f64 = x.rows(0, k).sum();
    if total > cap {
        let scale = cap / total;
        for j in 0..k {
            x[j] *= scale;
        }
    }
    let total: f64 = x.rows(0, k).sum();
    let neg: f64 = (0..k).filter(|&j| negated.get(j) == Some(&true)).map(|j| x[j]).sum();
    let slack = 1.0 - total;
    x[k] = x[k].clamp(neg + config.rho_min * slack, neg + config.rho_max * slack);
}

fn snap_row_relaxed(x: &mut DVector<f64>, config: &SpaceConfig) {
    let p = x.len() - 1;
    let cap = 1.0 - config.b_min;
    let abs_sum: f64 = x.rows(0, p).iter().map(|v| v.abs()).sum();
    if abs_sum > cap {
        let scale = cap / abs_sum;
        for j in 0..p {
            x[j] *= scale;
        }
    }
    let abs_sum: f64 = x.rows(0, p).iter().map(|v| v.abs()).sum();
    let neg_sum: f64 = x.rows(0, p).iter().map(|v| (-v).max(0.0)).sum();
    let floor = neg_sum + config.rho_min * (1.0 - abs_sum);
    if x[p] < floor {
        x[p] = floor;
    }
}

/// Projection of one positive row `[a_1..a_p, c]` onto its feasible set.
pub(crate) fn project_row_positive(x: &DVector<f64>, config: &SpaceConfig) -> DVector<f64> {
    let p = x.len() - 1;
    let ones_a = |last: f64, scale: f64| {
        let mut n = DVector::from_element(p + 1, scale);
        n[p] = last;
        n
    };
    let orthant = Orthant { dim: p };
    let budget = HalfSpace::new(ones_a(0.0, 1.0), 1.0 - config.b_min);
    // rho_min (1 - sum a) <= c  <=>  -rho_min sum a - c <= -rho_min
    let band_lo = HalfSpace::new(ones_a(-1.0, -config.rho_min), -config.rho_min);
    // c <= rho_max (1 - sum a)  <=>  rho_max sum a + c <= rho_max
    let band_hi = HalfSpace::new(ones_a(1.0, config.rho_max), config.rho_max);
    let mut projected = dykstra(x, &[&orthant, &budget, &band_lo, &band_hi]);
    snap_row(&mut projected, &[], config);
    projected
}

/// Projection of one signed row `[m_1..m_k, c_bar]` already reflected into
/// the nonnegative orthant of its sign pattern; `negated[j]` marks the
/// coordinates whose original sign is negative (they feed the
/// `max(-a_bar, 0)` term of the noise band).
fn project_row_signed_reflected(
    x: &DVector<f64>,
    negated: &[bool],
    config: &SpaceConfig,
) -> DVector<f64> {
    let k = negated.len();
    let normal = |last: f64, base: f64, neg_extra: f64| {
        let mut n = DVector::from_element(k + 1, 0.0);
        for j in 0..k {
            n[j] = base + if negated[j] { neg_extra } else { 0.0 };
        }
        n[k] = last;
        n
    };
    let orthant = Orthant { dim: k };
    let budget = HalfSpace::new(normal(0.0, 1.0, 0.0), 1.0 - config.b_min);
    // rho_min (1 - sum m) + sum_neg m <= c_bar
    let band_lo = HalfSpace::new(normal(-1.0, -config.rho_min, 1.0), -config.rho_min);
    // c_bar <= sum_neg m + rho_max (1 - sum m)
    let band_hi = HalfSpace::new(normal(1.0, config.rho_max, -1.0), config.rho_max);
    let mut projected = dykstra(x, &[&orthant, &budget, &band_lo, &band_hi]);
    snap_row(&mut projected, negated, config);
    projected
}

/// Projection of one row `[a_bar_1..a_bar_p, c_bar]` onto the convex
/// relaxation used by the generic maximum-likelihood estimator: the
/// `l1` weight budget plus the lower noise band, with no upper band.
pub(crate) fn project_row_relaxed(x: &DVector<f64>, config: &SpaceConfig) -> DVector<f64> {
    let p = x.len() - 1;
    let ball = L1Ball { dim: p, radius: 1.0 - config.b_min };
    let band = LowerBand { dim: p, rho_min: config.rho_min };
    let mut projected = dykstra(x, &[&ball, &band]);
    snap_row_relaxed(&mut projected, config);
    projected
}

pub(crate) fn row_distance(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x - y).norm()
}

/// Euclidean projection onto the positive feasible set, row by row.
pub fn project_theta(raw: &ReparamPositive, config: &SpaceConfig) -> ReparamPositive {
    let p = raw.p();
    let mut a = raw.a.clone();
    let mut c = raw.c.clone();
    for i in 0..p {
        let mut x = DVector::zeros(p + 1);
        for j in 0..p {
            x[j] = raw.a[(i, j)];
        }
        x[p] = raw.c[i];
        let y = project_row_positive(&x, config);
        for j in 0..p {
            a[(i, j)] = y[j];
        }
        c[i] = y[p];
    }
    ReparamPositive { a, c }
}

/// Euclidean projection onto the signed feasible set, row by row, within
/// the orthant of `pattern` (entries `+1`: kept nonnegative, `-1`: kept
/// nonpositive, `0`: pinned to zero). Without a pattern the signs of the
/// input are used.
pub fn project_theta_signed(
    raw: &ReparamSigned,
    config: &SpaceConfig,
    pattern: Option<&DMatrix<i8>>,
) -> ReparamSigned {
    let p = raw.p();
    let mut a_bar = DMatrix::zeros(p, p);
    let mut c_bar = DVector::zeros(p);
    for i in 0..p {
        let mut signs = Vec::with_capacity(p);
        for j in 0..p {
            let sign = match pattern {
                Some(m) => m[(i, j)].signum(),
                None => {
                    let v = raw.a_bar[(i, j)];
                    if v > 0.0 {
                        1
                    } else if v < 0.0 {
                        -1
                    } else {
                        0
                    }
                }
            };
            signs.push(sign);
        }
        // Reflect the free entries into the nonnegative orthant; pinned
        // entries drop out of the row problem entirely.
        let active: Vec<usize> = (0..p).filter(|&j| signs[j] != 0).collect();
        let mut x = DVector::zeros(active.len() + 1);
        let mut negated = vec![false; active.len()];
        for (slot, &j) in active.iter().enumerate() {
            x[slot] = f64::from(signs[j]) * raw.a_bar[(i, j)];
            negated[slot] = signs[j] < 0;
        }
        x[active.len()] = raw.c_bar[i];
        let y = project_row_signed_reflected(&x, &negated, config);
        for (slot, &j) in active.iter().enumerate() {
            a_bar[(i, j)] = f64::from(signs[j]) * y[slot];
        }
        c_bar[i] = y[active.len()];
    }
    ReparamSigned { a_bar, c_bar }
}
