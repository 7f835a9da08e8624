//! Generalization-gap harness: how differently the trained generator scores
//! against the training set versus held-out data, next to the theoretical
//! bound assembled from the same measured pieces.

use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::gan::{GanModel, Phi};
use crate::lcc::{code_point, Coding, Dictionary};
use crate::metrics::lipschitz::{phi_bound, phi_slope};
use crate::metrics::nn_distance::estimate_nn_distance;
use crate::metrics::quality::generative_quality;
use crate::metrics::rademacher::estimate_rademacher;
use crate::metrics::DiscClass;
use crate::sampler::{LccSampler, PriorMode, SamplerConfig};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GapReport {
    pub train_distance: f64,
    pub heldout_distance: f64,
    /// `|train_distance - heldout_distance|`.
    pub gap: f64,
    pub rademacher_estimate: f64,
    /// Bound on `|phi|` over the clamped discriminator range.
    pub delta: f64,
    /// Failure probability of the high-probability bound.
    pub confidence: f64,
    /// `l_phi * Q + 2 * delta`, from the measured coding quality `Q`.
    pub epsilon_dm: f64,
    /// `2R + 2*delta*sqrt(2*log(1/confidence)/N) + 2*epsilon_dm`.
    pub bound_value: f64,
    pub n: usize,
    /// Measured coding quality the epsilon term was assembled from.
    pub quality: f64,
}

impl GapReport {
    /// Recomputes the derived fields and confirms they match what is stored.
    pub fn validate(&self) -> Result<()> {
        let gap = (self.train_distance - self.heldout_distance).abs();
        if gap != self.gap {
            return Err(LccError::Contract(format!(
                "gap {} does not equal |{} - {}|",
                self.gap, self.train_distance, self.heldout_distance
            )));
        }
        let bound = 2.0 * self.rademacher_estimate
            + 2.0 * self.delta * (2.0 * (1.0 / self.confidence).ln() / self.n as f64).sqrt()
            + 2.0 * self.epsilon_dm;
        if bound != self.bound_value {
            return Err(LccError::Contract(format!(
                "bound_value {} does not recompose from fields ({bound})",
                self.bound_value
            )));
        }
        Ok(())
    }
}

pub const GAP_CSV_HEADER: &str =
    "train_distance,heldout_distance,gap,rademacher_estimate,delta,confidence,epsilon_dm,bound_value,n,quality";

/// One CSV row matching [`GAP_CSV_HEADER`], for aggregation across seeds.
pub fn gap_report_csv(r: &GapReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.train_distance,
        r.heldout_distance,
        r.gap,
        r.rademacher_estimate,
        r.delta,
        r.confidence,
        r.epsilon_dm,
        r.bound_value,
        r.n,
        r.quality
    )
}

#[derive(Debug, Clone)]
pub struct GapConfig {
    /// Number of generator samples drawn for each distance estimate.
    pub n_generated: usize,
    pub disc_hidden: usize,
    pub phi: Phi,
    /// Failure probability of the bound; 0.05 by default.
    pub confidence: f64,
    pub rademacher_draws: usize,
    /// Support size of the sampled codings feeding the generator.
    pub support_size: usize,
    /// How many latent points to code when measuring quality.
    pub quality_subsample: usize,
    pub seed: u64,
}

impl GapConfig {
    pub fn new(support_size: usize, seed: u64) -> Self {
        Self {
            n_generated: 500,
            disc_hidden: 16,
            phi: Phi::Identity,
            confidence: 0.05,
            rademacher_draws: 10,
            support_size,
            quality_subsample: 200,
            seed,
        }
    }
}

/// Assembles a [`GapReport`] for a trained model: distance to train and
/// held-out data through a fresh discriminator class, and the bound pieces
/// measured on the same run.
pub fn gap_harness(
    model: &GanModel,
    dict: &Dictionary,
    latents: &Tensor,
    train: &Tensor,
    heldout: &Tensor,
    cfg: &GapConfig,
) -> Result<GapReport> {
    if train.rows() == 0 || heldout.rows() == 0 {
        return Err(LccError::Config("empty train or heldout set".into()));
    }
    if cfg.confidence <= 0.0 || cfg.confidence >= 1.0 {
        return Err(LccError::Config("confidence must be in (0, 1)".into()));
    }

    let scfg = SamplerConfig {
        d: cfg.support_size,
        prior: PriorMode::StandardGaussian,
        seed: cfg.seed,
    };
    let mut sampler = LccSampler::new(dict, &scfg)?;
    let (_, gen_latents) = sampler.sample_batch_with_latents(cfg.n_generated)?;
    let generated = model.generate_from_latents(&gen_latents)?;

    let class = DiscClass::Mlp { hidden: cfg.disc_hidden };
    let train_distance = estimate_nn_distance(
        &generated,
        train,
        cfg.phi,
        &class,
        cfg.seed.wrapping_add(1),
    )?
    .value;
    let heldout_distance = estimate_nn_distance(
        &generated,
        heldout,
        cfg.phi,
        &class,
        cfg.seed.wrapping_add(2),
    )?
    .value;

    let rademacher_estimate = estimate_rademacher(
        train,
        cfg.phi,
        &class,
        cfg.rademacher_draws,
        cfg.seed.wrapping_add(3),
    )?;

    // coding quality over a subsample of the latent points
    let take = cfg.quality_subsample.min(latents.rows()).max(1);
    let mut sub = Vec::with_capacity(take * latents.cols());
    let stride = (latents.rows() / take).max(1);
    let mut codings: Vec<Coding> = Vec::with_capacity(take);
    let mut rows = 0usize;
    for i in (0..latents.rows()).step_by(stride) {
        if rows == take {
            break;
        }
        sub.extend_from_slice(latents.row(i));
        codings.push(code_point(dict, latents.row(i))?.coding);
        rows += 1;
    }
    let sub = Tensor::from_parts_unchecked(vec![rows, latents.cols()], sub);
    let quality = generative_quality(dict, &sub, &codings, dict.lipschitz_h, dict.lipschitz_g)?;

    let delta = phi_bound(cfg.phi);
    let epsilon_dm = phi_slope(cfg.phi) * quality + 2.0 * delta;
    let n = train.rows();
    let gap = (train_distance - heldout_distance).abs();
    let bound_value = 2.0 * rademacher_estimate
        + 2.0 * delta * (2.0 * (1.0 / cfg.confidence).ln() / n as f64).sqrt()
        + 2.0 * epsilon_dm;

    let report = GapReport {
        train_distance,
        heldout_distance,
        gap,
        rademacher_estimate,
        delta,
        confidence: cfg.confidence,
        epsilon_dm,
        bound_value,
        n,
        quality,
    };
    report.validate()?;
    Ok(report)
}
