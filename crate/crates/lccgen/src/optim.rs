//! Adam optimizer over [`NetworkParams`].

use crate::nn::{NetGrads, NetworkParams};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first: Vec<(Tensor, Tensor)>,
    second: Vec<(Tensor, Tensor)>,
}

impl AdamState {
    /// Defaults from the training setup: lr 0.0002, beta1 0.9, beta2 0.999,
    /// eps 1e-8.
    pub fn new(net: &NetworkParams, learning_rate: f64) -> Self {
        let zeros = || {
            net.layers()
                .iter()
                .map(|l| {
                    (
                        Tensor::zeros(l.weight.shape().to_vec()),
                        Tensor::zeros(l.bias.shape().to_vec()),
                    )
                })
                .collect::<Vec<_>>()
        };
        Self {
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn with_defaults(net: &NetworkParams) -> Self {
        Self::new(net, 2e-4)
    }
}

/// One Adam update in place. `sign` is +1.0 for gradient descent on the given
/// gradients and -1.0 for ascent.
pub fn adam_step(params: &mut NetworkParams, grads: &NetGrads, state: &mut AdamState, sign: f64) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for (li, layer) in params.layers_mut().iter_mut().enumerate() {
        let (gw, gb) = &grads.layers[li];
        let (mw, mb) = &mut state.first[li];
        let (vw, vb) = &mut state.second[li];
        update_slice(
            layer.weight.data_mut(),
            gw.data(),
            mw.data_mut(),
            vw.data_mut(),
            state.learning_rate,
            state.beta1,
            state.beta2,
            state.eps,
            bc1,
            bc2,
            sign,
        );
        update_slice(
            layer.bias.data_mut(),
            gb.data(),
            mb.data_mut(),
            vb.data_mut(),
            state.learning_rate,
            state.beta1,
            state.beta2,
            state.eps,
            bc1,
            bc2,
            sign,
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
    sign: f64,
) {
    for i in 0..p.len() {
        let gi = sign * g[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        let mhat = m[i] / bc1;
        let vhat = v[i] / bc2;
        p[i] -= lr * mhat / (vhat.sqrt() + eps);
    }
}
