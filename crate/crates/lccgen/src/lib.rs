//! Generative modeling on learned latent manifolds: an autoencoder maps data
//! to a low-dimensional latent space, a small anchor dictionary covers that
//! space with sparse affine codings, and a GAN is trained on codings drawn
//! from the anchor neighborhoods. Evaluation utilities estimate neural-network
//! distance, Rademacher complexity, Lipschitz constants and sample quality.

pub mod autoencoder;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod gan;
pub mod graph;
pub mod kmeans;
pub mod lcc;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod pipeline;
pub mod sampler;
pub mod tensor;

pub use error::{LccError, Result};
pub use tensor::Tensor;
