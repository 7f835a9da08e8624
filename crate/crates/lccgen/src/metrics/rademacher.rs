//! Empirical Rademacher complexity of a discriminator class on a fixed
//! sample: mean over sign draws of the best achievable signed correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{LccError, Result};
use crate::gan::Phi;
use crate::graph::Graph;
use crate::metrics::DiscClass;
use crate::nn::{forward_on, he_init, Activation, NetGrads};
use crate::optim::{adam_step, AdamState};
use crate::tensor::Tensor;

const ASCENT_STEPS: usize = 500;

/// Best value of `(1/N) sum_i sigma_i phi(D(x_i))` for one sign vector.
fn per_draw_optimum(
    samples: &Tensor,
    sigma: &[f64],
    phi: Phi,
    class: &DiscClass,
    seed: u64,
) -> f64 {
    let n = samples.rows();
    match class {
        DiscClass::Constant(c) => {
            // no freedom: the single class member's value
            sigma.iter().map(|s| s * phi.apply(*c)).sum::<f64>() / n as f64
        }
        DiscClass::Tabular => {
            // per point, pick the end of [0, 1] that the sign prefers
            let (lo, hi) = (phi.apply(0.0), phi.apply(1.0));
            sigma
                .iter()
                .map(|s| (s * lo).max(s * hi))
                .sum::<f64>()
                / n as f64
        }
        DiscClass::Mlp { hidden } => {
            let dim = samples.cols();
            let mut disc = he_init(
                &[dim, *hidden, 1],
                &[Activation::Tanh, Activation::Sigmoid],
                seed,
            )
            .expect("static dims");
            let mut state = AdamState::new(&disc, 1e-2);
            let sigma_t = Tensor::from_parts_unchecked(vec![n, 1], sigma.to_vec());
            let mut best = f64::NEG_INFINITY;
            for _ in 0..ASCENT_STEPS {
                let mut graph = Graph::new();
                let xid = graph.leaf(samples.clone());
                let sid = graph.leaf(sigma_t.clone());
                let nodes = forward_on(&mut graph, &disc, xid).expect("dims fixed");
                let phid = match phi {
                    Phi::Log => {
                        let c = graph.clamp(
                            nodes.output,
                            crate::gan::PHI_CLAMP,
                            1.0 - crate::gan::PHI_CLAMP,
                        );
                        graph.ln(c)
                    }
                    Phi::Identity => nodes.output,
                };
                let weighted = graph.mul(phid, sid).expect("same shape");
                let obj = graph.mean(weighted);
                let value = graph.value(obj).data()[0];
                if !value.is_finite() {
                    break;
                }
                best = best.max(value);
                let grads = graph.backward(obj).expect("scalar");
                let dgrads = NetGrads::extract(&grads, &nodes);
                adam_step(&mut disc, &dgrads, &mut state, -1.0);
            }
            best
        }
    }
}

/// Mean of `k` per-draw optima over independent sign vectors.
pub fn estimate_rademacher(
    samples: &Tensor,
    phi: Phi,
    class: &DiscClass,
    k: usize,
    seed: u64,
) -> Result<f64> {
    let n = samples.rows();
    if n == 0 {
        return Err(LccError::Config("empty sample set".into()));
    }
    if k == 0 {
        return Err(LccError::Config("need at least one sign draw".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for draw in 0..k {
        let sigma: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        total += per_draw_optimum(samples, &sigma, phi, class, seed.wrapping_add(draw as u64));
    }
    Ok(total / k as f64)
}
