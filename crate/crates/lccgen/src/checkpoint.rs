//! JSON checkpoint format for networks: layer dims, activation tags and the
//! raw weight/bias values as decimal numbers that round-trip 64-bit floats
//! exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::nn::{Activation, Layer, NetworkParams};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkCheckpoint {
    pub layers: Vec<LayerCheckpoint>,
}

impl NetworkCheckpoint {
    pub fn from_params(net: &NetworkParams) -> Self {
        Self {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerCheckpoint {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    activation: l.activation,
                    weight: l.weight.data().to_vec(),
                    bias: l.bias.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn into_params(self) -> Result<NetworkParams> {
        let layers = self
            .layers
            .into_iter()
            .map(|l| {
                Ok(Layer {
                    weight: Tensor::matrix(l.in_dim, l.out_dim, l.weight)?,
                    bias: Tensor::vector(l.bias)?,
                    activation: l.activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        NetworkParams::new(layers)
    }
}

pub fn save_network(net: &NetworkParams, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(&NetworkCheckpoint::from_params(net))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<NetworkParams> {
    if !path.exists() {
        return Err(LccError::StageOrder(path.display().to_string()));
    }
    let json = fs::read_to_string(path)?;
    let ckpt: NetworkCheckpoint = serde_json::from_str(&json)?;
    ckpt.into_params()
}

/// Generic JSON save/load for any serializable artifact, with the missing-file
/// case reported as a stage-order error.
pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(LccError::StageOrder(path.display().to_string()));
    }
    let json = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&json)?)
}
