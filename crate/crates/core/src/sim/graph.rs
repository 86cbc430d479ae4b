//! Random ground-truth network generation.
//!
//! Every node draws an in-degree uniformly from `{1..d_max}`, that many
//! distinct parents, and a noise weight `b_i`; the parent weights are
//! drawn uniformly and rescaled to exhaust the budget `1 - b_i`. A rescale
//! that would push a weight under `a_min` is rejected and redrawn, so
//! every edge weight stays detectable by thresholding. In signed mode
//! each edge lands in the excitatory or the inhibitory matrix with equal
//! probability.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{BarParams, GenericBarParams, GraphSpec, ModelParams, SpaceConfig};
use crate::rng::{stream, SimRng};

const MAX_RETRIES: usize = 10_000;

/// Draws a random parameter set whose support graph obeys `spec` and whose
/// values obey `config`; deterministic in `seed`.
pub fn generate_graph(spec: &GraphSpec, config: &SpaceConfig, seed: u64) -> Result<ModelParams> {
    spec.check_against(config)?;
    let mut rng = SimRng::new(seed, stream::GRAPH);
    let p = spec.p;
    let mut a = DMatrix::zeros(p, p);
    let mut a_tilde = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    let mut rho_w = DVector::zeros(p);

    for i in 0..p {
        let degree = rng.int_range(1, spec.d_max);
        let parents = rng.sample_distinct(p, degree);
        // The node keeps at least b_min of its budget; the cap leaves room
        // for `degree` weights of at least a_min each.
        let b_cap = 1.0 - degree as f64 * spec.a_min;
        b[i] = rng.uniform(config.b_min, b_cap);
        let budget = 1.0 - b[i];
        // Largest weight a single edge could carry with the others at a_min.
        let w_max = budget - (degree as f64 - 1.0) * spec.a_min;

        let mut weights = vec![0.0; degree];
        let mut accepted = false;
        for _ in 0..MAX_RETRIES {
            let mut total = 0.0;
            for w in weights.iter_mut() {
                *w = rng.uniform(spec.a_min, w_max);
                total += *w;
            }
            let scale = budget / total;
            if weights.iter().all(|w| w * scale >= spec.a_min) {
                for w in weights.iter_mut() {
                    *w *= scale;
                }
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::RetriesExhausted { node: i, limit: MAX_RETRIES });
        }

        for (&j, &w) in parents.iter().zip(weights.iter()) {
            if spec.signed && rng.bernoulli(0.5) {
                a_tilde[(i, j)] = w;
            } else {
                a[(i, j)] = w;
            }
        }
        rho_w[i] = rng.uniform(config.rho_min, config.rho_max);
    }

    let params = if spec.signed {
        ModelParams::Generic(GenericBarParams::new(a, a_tilde, b, rho_w)?)
    } else {
        ModelParams::Positive(BarParams::new(a, b, rho_w)?)
    };
    params.validate(config)?.into_result()?;
    Ok(params)
}
