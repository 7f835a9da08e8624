//! Encoder/decoder training and latent embedding extraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::NetworkCheckpoint;
use crate::data::Dataset;
use crate::error::{LccError, Result};
use crate::graph::Graph;
use crate::nn::{forward, forward_on, he_init, Activation, NetGrads, NetworkParams};
use crate::optim::{adam_step, AdamState};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct AutoEncoder {
    pub encoder: NetworkParams,
    pub decoder: NetworkParams,
    pub latent_dim: usize,
}

impl AutoEncoder {
    pub fn new(encoder: NetworkParams, decoder: NetworkParams) -> Result<Self> {
        if encoder.out_dim() != decoder.in_dim() {
            return Err(LccError::Dimension(format!(
                "encoder output {} vs decoder input {}",
                encoder.out_dim(),
                decoder.in_dim()
            )));
        }
        let latent_dim = encoder.out_dim();
        Ok(Self { encoder, decoder, latent_dim })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AeCheckpoint {
    pub encoder: NetworkCheckpoint,
    pub decoder: NetworkCheckpoint,
    pub latent_dim: usize,
}

impl AeCheckpoint {
    pub fn from_ae(ae: &AutoEncoder) -> Self {
        Self {
            encoder: NetworkCheckpoint::from_params(&ae.encoder),
            decoder: NetworkCheckpoint::from_params(&ae.decoder),
            latent_dim: ae.latent_dim,
        }
    }

    pub fn into_ae(self) -> Result<AutoEncoder> {
        AutoEncoder::new(self.encoder.into_params()?, self.decoder.into_params()?)
    }
}

#[derive(Debug, Clone)]
pub struct AeTrainConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden_width: usize,
}

impl AeTrainConfig {
    pub fn new(latent_dim: usize, epochs: usize, seed: u64) -> Self {
        Self {
            latent_dim,
            epochs,
            seed,
            learning_rate: 1e-3,
            batch_size: 64,
            hidden_width: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AeTrainResult {
    pub ae: AutoEncoder,
    /// Mean squared reconstruction error per epoch.
    pub loss_curve: Vec<f64>,
    /// Set when the latent dimension exceeds the data dimension (expansion,
    /// not compression).
    pub expansion_warning: bool,
}

/// Minimizes mean squared reconstruction error with Adam. Two tanh hidden
/// layers per side; the latent layer is tanh so embeddings live in
/// `(-1, 1)^{d_B}`.
pub fn train_ae(ds: &Dataset, cfg: &AeTrainConfig) -> Result<AeTrainResult> {
    if cfg.latent_dim == 0 {
        return Err(LccError::Config("latent dim must be positive".into()));
    }
    if cfg.epochs == 0 {
        return Err(LccError::Config("epochs must be positive".into()));
    }
    let d = ds.dim();
    let w = cfg.hidden_width;
    let mut encoder = he_init(
        &[d, w, w, cfg.latent_dim],
        &[Activation::Tanh, Activation::Tanh, Activation::Tanh],
        cfg.seed,
    )?;
    let mut decoder = he_init(
        &[cfg.latent_dim, w, w, d],
        &[Activation::Tanh, Activation::Tanh, Activation::Tanh],
        cfg.seed.wrapping_add(1),
    )?;
    let mut enc_state = AdamState::new(&encoder, cfg.learning_rate);
    let mut dec_state = AdamState::new(&decoder, cfg.learning_rate);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(2));

    let n = ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut xd = Vec::with_capacity(chunk.len() * d);
            for &i in chunk {
                xd.extend_from_slice(ds.samples.row(i));
            }
            let x = Tensor::from_parts_unchecked(vec![chunk.len(), d], xd);

            let mut graph = Graph::new();
            let xid = graph.leaf(x);
            let enc_nodes = forward_on(&mut graph, &encoder, xid)?;
            let dec_nodes = forward_on(&mut graph, &decoder, enc_nodes.output)?;
            let diff = graph.sub(dec_nodes.output, xid)?;
            let sq = graph.mul(diff, diff)?;
            let loss = graph.mean(sq);
            let grads = graph.backward(loss)?;
            let enc_grads = NetGrads::extract(&grads, &enc_nodes);
            let dec_grads = NetGrads::extract(&grads, &dec_nodes);
            adam_step(&mut encoder, &enc_grads, &mut enc_state, 1.0);
            adam_step(&mut decoder, &dec_grads, &mut dec_state, 1.0);
            epoch_loss += graph.value(loss).item()?;
            batches += 1;
        }
        loss_curve.push(epoch_loss / batches as f64);
    }
    Ok(AeTrainResult {
        expansion_warning: cfg.latent_dim > d,
        ae: AutoEncoder::new(encoder, decoder)?,
        loss_curve,
    })
}

/// Row `i` of the result is `Encoder(x_i)`.
pub fn embed(ae: &AutoEncoder, ds: &Dataset) -> Result<Tensor> {
    if ds.dim() != ae.encoder.in_dim() {
        return Err(LccError::Dimension(format!(
            "dataset dim {} vs encoder input {}",
            ds.dim(),
            ae.encoder.in_dim()
        )));
    }
    forward(&ae.encoder, &ds.samples)
}

/// Mean squared reconstruction error of the autoencoder on a dataset.
pub fn reconstruction_mse(ae: &AutoEncoder, ds: &Dataset) -> Result<f64> {
    let h = embed(ae, ds)?;
    let xhat = forward(&ae.decoder, &h)?;
    let n = ds.samples.len() as f64;
    Ok(xhat
        .data()
        .iter()
        .zip(ds.samples.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}
