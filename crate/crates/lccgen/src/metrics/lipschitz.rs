//! Sampled Lipschitz-constant estimation for first- and second-order
//! smoothness, plus the constants attached to the objective reshaping.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::gan::{Phi, PHI_CLAMP};
use crate::graph::Graph;
use crate::nn::{forward_on, NetworkParams};
use crate::tensor::{dist2, Tensor};

/// First- and second-order smoothness of one function, estimated from
/// sampled pairs and inflated by a safety factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionLipschitz {
    pub first_order: f64,
    pub second_order: f64,
    pub n_pairs: usize,
    pub safety: f64,
    pub method: String,
}

/// The constants the approximation inequalities and the generalization bound
/// consume: discriminator slope `l_x`, generator slope `l_h`, generator
/// curvature `l_g`, and the slope `l_phi` of the objective reshaping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub l_x: f64,
    pub l_h: f64,
    pub l_g: f64,
    pub l_phi: f64,
    pub n_pairs: usize,
    pub safety: f64,
    pub method: String,
}

/// Bound on `|phi|` over the clamped discriminator range.
pub fn phi_bound(phi: Phi) -> f64 {
    match phi {
        Phi::Log => -PHI_CLAMP.ln(),
        Phi::Identity => 1.0,
    }
}

/// Bound on `|phi'|` over the clamped discriminator range.
pub fn phi_slope(phi: Phi) -> f64 {
    match phi {
        Phi::Log => 1.0 / PHI_CLAMP,
        Phi::Identity => 1.0,
    }
}

/// Core estimator over arbitrary `f` with a supplied Jacobian. The
/// first-order constant is the sampled max of `||f(x') - f(x)|| / ||x - x'||`;
/// the second-order constant uses the first-order Taylor residual divided by
/// the squared distance. Coincident pairs are skipped.
pub fn estimate_lipschitz_fn(
    f: impl Fn(&[f64]) -> Vec<f64>,
    jacobian: impl Fn(&[f64]) -> Vec<Vec<f64>>,
    mut domain_sampler: impl FnMut(&mut ChaCha12Rng) -> Vec<f64>,
    n_pairs: usize,
    safety: f64,
    seed: u64,
) -> Result<FunctionLipschitz> {
    if n_pairs < 100 {
        return Err(LccError::Config(format!(
            "need at least 100 pairs, got {n_pairs}"
        )));
    }
    if safety <= 0.0 {
        return Err(LccError::Config("safety factor must be positive".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for _ in 0..n_pairs {
        let x = domain_sampler(&mut rng);
        let xp = domain_sampler(&mut rng);
        let dx = dist2(&x, &xp);
        if dx < 1e-12 {
            continue;
        }
        let fx = f(&x);
        let fxp = f(&xp);
        first = first.max(dist2(&fx, &fxp) / dx);

        let jac = jacobian(&x);
        let mut resid2 = 0.0;
        for (p, row) in jac.iter().enumerate() {
            let lin: f64 = row.iter().zip(x.iter().zip(&xp)).map(|(j, (a, b))| j * (b - a)).sum();
            let r = fxp[p] - fx[p] - lin;
            resid2 += r * r;
        }
        second = second.max(resid2.sqrt() / (dx * dx));
    }
    Ok(FunctionLipschitz {
        first_order: safety * first,
        second_order: safety * second,
        n_pairs,
        safety,
        method: "sampled pair maximum with autodiff Taylor residual".into(),
    })
}

/// Jacobian rows of a network at one input point, via one backward pass per
/// output dimension.
pub fn network_jacobian(net: &NetworkParams, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let out_dim = net.out_dim();
    let mut rows = Vec::with_capacity(out_dim);
    for p in 0..out_dim {
        let mut mask = vec![0.0; out_dim];
        mask[p] = 1.0;
        let mut g = Graph::new();
        let xid = g.leaf(Tensor::from_parts_unchecked(vec![1, x.len()], x.to_vec()));
        let nodes = forward_on(&mut g, net, xid)?;
        let mid = g.leaf(Tensor::from_parts_unchecked(vec![1, out_dim], mask));
        let sel = g.mul(nodes.output, mid)?;
        let loss = g.sum(sel);
        let grads = g.backward(loss)?;
        rows.push(grads.get(xid).data().to_vec());
    }
    Ok(rows)
}

/// Estimator specialized to a network, with the Jacobian from reverse-mode
/// differentiation.
pub fn estimate_lipschitz(
    net: &NetworkParams,
    domain_sampler: impl FnMut(&mut ChaCha12Rng) -> Vec<f64>,
    n_pairs: usize,
    safety: f64,
    seed: u64,
) -> Result<FunctionLipschitz> {
    estimate_lipschitz_fn(
        |x| {
            let t = Tensor::from_parts_unchecked(vec![1, x.len()], x.to_vec());
            crate::nn::forward(net, &t).expect("dims checked by caller").data().to_vec()
        },
        |x| network_jacobian(net, x).expect("dims checked by caller"),
        domain_sampler,
        n_pairs,
        safety,
        seed,
    )
}

impl LipschitzEstimate {
    /// Combines generator and discriminator estimates with the phi constants
    /// into the bundle the inequality checks and the gap harness consume.
    pub fn assemble(
        gen: &FunctionLipschitz,
        disc: &FunctionLipschitz,
        phi: Phi,
    ) -> Self {
        Self {
            l_x: disc.first_order,
            l_h: gen.first_order,
            l_g: gen.second_order,
            l_phi: phi_slope(phi),
            n_pairs: gen.n_pairs.min(disc.n_pairs),
            safety: gen.safety,
            method: gen.method.clone(),
        }
    }
}
