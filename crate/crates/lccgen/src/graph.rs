//! Reverse-mode automatic differentiation over a flat tape.
//!
//! A [`Graph`] owns every intermediate tensor of one computation. Forward ops
//! append nodes; [`Graph::backward`] walks the tape in reverse and accumulates
//! adjoints. Graphs are plain values, so two graphs can never exchange
//! gradients.

use crate::error::{LccError, Result};
use crate::tensor::{matmul, transpose, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    /// `[n,m] + [m]` row broadcast (bias add).
    AddRow(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    /// `c - x`, elementwise; the constant is baked into the forward value.
    SubFrom(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    Ln(NodeId),
    Clamp(NodeId, f64, f64),
    Mean(NodeId),
    Sum(NodeId),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = matmul(self.value(a), self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    /// Adds a `[m]` bias row to every row of a `[n,m]` matrix.
    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let m = self.value(a).cols();
        if self.value(bias).len() != m {
            return Err(LccError::Dimension(format!(
                "bias of length {} against {} columns",
                self.value(bias).len(),
                m
            )));
        }
        let a_t = self.value(a);
        let b_t = self.value(bias);
        let mut out = a_t.data().to_vec();
        for (i, v) in out.iter_mut().enumerate() {
            *v += b_t.data()[i % m];
        }
        let v = Tensor::from_parts_unchecked(a_t.shape().to_vec(), out);
        Ok(self.push(v, Op::AddRow(a, bias)))
    }

    fn zip(&mut self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(LccError::Dimension(format!(
                "elementwise op on {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let data: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let v = Tensor::from_parts_unchecked(self.value(a).shape().to_vec(), data);
        Ok(self.push(v, op))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn map(&mut self, a: NodeId, f: impl Fn(f64) -> f64, op: Op) -> NodeId {
        let data: Vec<f64> = self.value(a).data().iter().map(|&x| f(x)).collect();
        let v = Tensor::from_parts_unchecked(self.value(a).shape().to_vec(), data);
        self.push(v, op)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        self.map(a, |x| c * x, Op::Scale(a, c))
    }

    /// `c - x` elementwise.
    pub fn sub_from(&mut self, c: f64, a: NodeId) -> NodeId {
        self.map(a, |x| c - x, Op::SubFrom(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.map(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.map(a, |x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(a))
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        self.map(a, f64::ln, Op::Ln(a))
    }

    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> NodeId {
        self.map(a, |x| x.clamp(lo, hi), Op::Clamp(a, lo, hi))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let n = self.value(a).len() as f64;
        let v = self.value(a).data().iter().sum::<f64>() / n;
        self.push(Tensor::from_parts_unchecked(vec![1], vec![v]), Op::Mean(a))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).data().iter().sum::<f64>();
        self.push(Tensor::from_parts_unchecked(vec![1], vec![v]), Op::Sum(a))
    }

    /// Reverse pass from a scalar loss. Returns one gradient tensor per node;
    /// nodes not on a path to the loss get zeros.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(LccError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::zeros(n.value.shape().to_vec()))
            .collect();
        grads[loss.0].data_mut()[0] = 1.0;

        for i in (0..=loss.0).rev() {
            let g = grads[i].clone();
            if g.data().iter().all(|&v| v == 0.0) {
                continue;
            }
            match self.nodes[i].op.clone() {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let da = matmul(&g, &transpose(self.value(b)))?;
                    let db = matmul(&transpose(self.value(a)), &g)?;
                    accumulate(&mut grads[a.0], &da);
                    accumulate(&mut grads[b.0], &db);
                }
                Op::AddRow(a, bias) => {
                    accumulate(&mut grads[a.0], &g);
                    let m = self.value(bias).len();
                    let gb = grads[bias.0].data_mut();
                    for (k, &v) in g.data().iter().enumerate() {
                        gb[k % m] += v;
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[a.0], &g);
                    accumulate(&mut grads[b.0], &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads[a.0], &g);
                    accumulate_scaled(&mut grads[b.0], &g, -1.0);
                }
                Op::Mul(a, b) => {
                    let bv = self.value(b).data().to_vec();
                    let av = self.value(a).data().to_vec();
                    for (k, &gv) in g.data().iter().enumerate() {
                        grads[a.0].data_mut()[k] += gv * bv[k];
                        grads[b.0].data_mut()[k] += gv * av[k];
                    }
                }
                Op::Scale(a, c) => accumulate_scaled(&mut grads[a.0], &g, c),
                Op::SubFrom(a) => accumulate_scaled(&mut grads[a.0], &g, -1.0),
                Op::Tanh(a) => {
                    let y = self.nodes[i].value.data().to_vec();
                    for (k, &gv) in g.data().iter().enumerate() {
                        grads[a.0].data_mut()[k] += gv * (1.0 - y[k] * y[k]);
                    }
                }
                Op::Relu(a) => {
                    let x = self.value(a).data().to_vec();
                    for (k, &gv) in g.data().iter().enumerate() {
                        if x[k] > 0.0 {
                            grads[a.0].data_mut()[k] += gv;
                        }
                    }
                }
                Op::Sigmoid(a) => {
                    let y = self.nodes[i].value.data().to_vec();
                    for (k, &gv) in g.data().iter().enumerate() {
                        grads[a.0].data_mut()[k] += gv * y[k] * (1.0 - y[k]);
                    }
                }
                Op::Ln(a) => {
                    let x = self.value(a).data().to_vec();
                    for (k, &gv) in g.data().iter().enumerate() {
                        grads[a.0].data_mut()[k] += gv / x[k];
                    }
                }
                Op::Clamp(a, lo, hi) => {
                    let x = self.value(a).data().to_vec();
                    for (k, &gv) in g.data().iter().enumerate() {
                        if x[k] > lo && x[k] < hi {
                            grads[a.0].data_mut()[k] += gv;
                        }
                    }
                }
                Op::Mean(a) => {
                    let n = self.value(a).len() as f64;
                    let gv = g.data()[0] / n;
                    for v in grads[a.0].data_mut() {
                        *v += gv;
                    }
                }
                Op::Sum(a) => {
                    let gv = g.data()[0];
                    for v in grads[a.0].data_mut() {
                        *v += gv;
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(dst: &mut Tensor, src: &Tensor) {
    for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}

fn accumulate_scaled(dst: &mut Tensor, src: &Tensor, c: f64) {
    for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += c * s;
    }
}

/// Per-node gradients from one backward pass.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> &Tensor {
        &self.grads[id.0]
    }
}
