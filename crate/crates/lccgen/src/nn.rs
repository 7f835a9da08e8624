//! Layered affine+activation networks: the encoder, decoder, generator and
//! discriminator all share this parameterization.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::graph::{Graph, Gradients, NodeId};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `[in, out]` weight matrix.
    pub weight: Tensor,
    /// `[out]` bias vector.
    pub bias: Tensor,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layers: Vec<Layer>,
}

impl NetworkParams {
    /// Checks that consecutive layer dimensions chain.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(LccError::Config("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(LccError::Dimension(format!(
                    "layer output {} does not chain into next input {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.out_dim() {
                return Err(LccError::Dimension(format!(
                    "bias length {} vs layer width {}",
                    l.bias.len(),
                    l.out_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("nonempty").out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }
}

/// He initialization: weights N(0, 2/fan_in), zero biases, deterministic
/// under the seed.
pub fn he_init(dims: &[usize], activations: &[Activation], seed: u64) -> Result<NetworkParams> {
    if dims.len() < 2 {
        return Err(LccError::Config("he_init needs at least [in, out] dims".into()));
    }
    if activations.len() != dims.len() - 1 {
        return Err(LccError::Config(format!(
            "{} activations for {} layers",
            activations.len(),
            dims.len() - 1
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (k, w) in dims.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
            .map_err(|e| LccError::Config(e.to_string()))?;
        let weights: Vec<f64> = (0..fan_in * fan_out).map(|_| normal.sample(&mut rng)).collect();
        layers.push(Layer {
            weight: Tensor::matrix(fan_in, fan_out, weights)?,
            bias: Tensor::zeros(vec![fan_out]),
            activation: activations[k],
        });
    }
    NetworkParams::new(layers)
}

/// Tape handles for one network instantiated on a graph; used to pull
/// per-parameter gradients after a backward pass.
#[derive(Debug, Clone)]
pub struct NetNodes {
    pub params: Vec<(NodeId, NodeId)>,
    pub output: NodeId,
}

/// Records the layered affine+activation composition on the tape.
pub fn forward_on(graph: &mut Graph, net: &NetworkParams, x: NodeId) -> Result<NetNodes> {
    if graph.value(x).cols() != net.in_dim() {
        return Err(LccError::Dimension(format!(
            "input has {} features, network expects {}",
            graph.value(x).cols(),
            net.in_dim()
        )));
    }
    let mut params = Vec::with_capacity(net.layers.len());
    let mut cur = x;
    for layer in &net.layers {
        let w = graph.leaf(layer.weight.clone());
        let b = graph.leaf(layer.bias.clone());
        params.push((w, b));
        let z = graph.matmul(cur, w)?;
        let z = graph.add_row(z, b)?;
        cur = match layer.activation {
            Activation::Tanh => graph.tanh(z),
            Activation::Relu => graph.relu(z),
            Activation::Sigmoid => graph.sigmoid(z),
            Activation::Identity => z,
        };
    }
    Ok(NetNodes { params, output: cur })
}

/// One-shot evaluation on a scratch graph.
pub fn forward(net: &NetworkParams, x: &Tensor) -> Result<Tensor> {
    let mut graph = Graph::new();
    let xid = graph.leaf(x.clone());
    let nodes = forward_on(&mut graph, net, xid)?;
    Ok(graph.value(nodes.output).clone())
}

/// Per-layer `(dW, db)` gradients, shaped like the network.
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub layers: Vec<(Tensor, Tensor)>,
}

impl NetGrads {
    pub fn zeros_like(net: &NetworkParams) -> Self {
        Self {
            layers: net
                .layers()
                .iter()
                .map(|l| {
                    (
                        Tensor::zeros(l.weight.shape().to_vec()),
                        Tensor::zeros(l.bias.shape().to_vec()),
                    )
                })
                .collect(),
        }
    }

    pub fn extract(grads: &Gradients, nodes: &NetNodes) -> Self {
        Self {
            layers: nodes
                .params
                .iter()
                .map(|&(w, b)| (grads.get(w).clone(), grads.get(b).clone()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &NetGrads) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (d, s) in w.data_mut().iter_mut().zip(ow.data()) {
                *d += s;
            }
            for (d, s) in b.data_mut().iter_mut().zip(ob.data()) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for (w, b) in self.layers.iter_mut() {
            for d in w.data_mut() {
                *d *= c;
            }
            for d in b.data_mut() {
                *d *= c;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.data().iter().chain(b.data()))
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.data().iter().chain(b.data()))
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}
