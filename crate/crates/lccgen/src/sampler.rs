//! Draws sparse codings supported on small anchor neighborhoods: pick a seed
//! point from a pool, keep its `d` nearest anchors, and fill that support with
//! Gaussian weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::lcc::{reconstruct, Coding, CodingOrigin, Dictionary};
use crate::tensor::{dist2, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// Raw `N(0, I_d)` weights on the support.
    StandardGaussian,
    /// Gaussian weights rescaled to sum to one; redrawn when the sum is too
    /// close to zero to divide by.
    NormalizedGaussian,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Support size: number of nearest anchors that receive weight.
    pub d: usize,
    pub prior: PriorMode,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(d: usize, seed: u64) -> Self {
        Self { d, prior: PriorMode::StandardGaussian, seed }
    }
}

pub struct LccSampler<'a> {
    dict: &'a Dictionary,
    /// Seed-point pool; defaults to the anchor rows themselves.
    pool: Tensor,
    d: usize,
    prior: PriorMode,
    rng: ChaCha12Rng,
}

impl<'a> LccSampler<'a> {
    pub fn new(dict: &'a Dictionary, cfg: &SamplerConfig) -> Result<Self> {
        Self::with_pool(dict, dict.anchors().clone(), cfg)
    }

    /// Uses an explicit seed-point pool (for example the encoded training
    /// set) instead of the anchors.
    pub fn with_pool(dict: &'a Dictionary, pool: Tensor, cfg: &SamplerConfig) -> Result<Self> {
        if cfg.d == 0 {
            return Err(LccError::Config("support size d must be positive".into()));
        }
        if cfg.d > dict.num_anchors() {
            return Err(LccError::Config(format!(
                "support size {} exceeds {} anchors",
                cfg.d,
                dict.num_anchors()
            )));
        }
        if pool.cols() != dict.latent_dim() {
            return Err(LccError::Dimension(format!(
                "pool dim {} vs latent dim {}",
                pool.cols(),
                dict.latent_dim()
            )));
        }
        Ok(Self {
            dict,
            pool,
            d: cfg.d,
            prior: cfg.prior,
            rng: ChaCha12Rng::seed_from_u64(cfg.seed),
        })
    }

    /// Indices of the `d` anchors nearest to `point`, ties broken toward the
    /// lower anchor index.
    fn nearest_anchors(&self, point: &[f64]) -> Vec<usize> {
        let m = self.dict.num_anchors();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            dist2(self.dict.anchor(a), point)
                .partial_cmp(&dist2(self.dict.anchor(b), point))
                .unwrap()
                .then(a.cmp(&b))
        });
        order.truncate(self.d);
        order
    }

    pub fn sample_coding(&mut self) -> Coding {
        let seed_idx = self.rng.gen_range(0..self.pool.rows());
        let support = self.nearest_anchors(self.pool.row(seed_idx));
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut gamma = vec![0.0; self.dict.num_anchors()];
        loop {
            let z: Vec<f64> = (0..self.d).map(|_| normal.sample(&mut self.rng)).collect();
            match self.prior {
                PriorMode::StandardGaussian => {
                    for (slot, &j) in support.iter().enumerate() {
                        gamma[j] = z[slot];
                    }
                    break;
                }
                PriorMode::NormalizedGaussian => {
                    let sum: f64 = z.iter().sum();
                    if sum.abs() < 1e-6 {
                        continue; // degenerate draw, try again
                    }
                    for (slot, &j) in support.iter().enumerate() {
                        gamma[j] = z[slot] / sum;
                    }
                    break;
                }
            }
        }
        Coding::new(gamma, CodingOrigin::Sampled)
    }

    pub fn sample_batch(&mut self, n: usize) -> Vec<Coding> {
        (0..n).map(|_| self.sample_coding()).collect()
    }

    /// Batch of codings together with their latent reconstructions `V*gamma`,
    /// the inputs a generator consumes.
    pub fn sample_batch_with_latents(&mut self, n: usize) -> Result<(Vec<Coding>, Tensor)> {
        let codings = self.sample_batch(n);
        let d = self.dict.latent_dim();
        let mut flat = Vec::with_capacity(n * d);
        for c in &codings {
            flat.extend(reconstruct(self.dict, c)?);
        }
        Ok((codings, Tensor::matrix(n, d, flat)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_dict() -> Dictionary {
        // anchors at 0, 1, 2, 9 on the real line
        Dictionary::new(
            Tensor::matrix(4, 1, vec![0.0, 1.0, 2.0, 9.0]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn support_is_nearest_anchors_of_seed_point() {
        let dict = line_dict();
        // pool pinned to anchor 1 only, so the seed point is always 1.0:
        // nearest two anchors are 1 (dist 0) and then 0/2 tie broken to 0
        let pool = Tensor::matrix(1, 1, vec![1.0]).unwrap();
        let mut s =
            LccSampler::with_pool(&dict, pool, &SamplerConfig::new(2, 0)).unwrap();
        for _ in 0..20 {
            let c = s.sample_coding();
            assert_eq!(c.support(), &[0, 1]);
            assert_eq!(c.gamma()[2], 0.0);
            assert_eq!(c.gamma()[3], 0.0);
        }
    }

    #[test]
    fn known_draw_lands_on_the_tied_support() {
        // reference construction: with z = (0.5, -0.3) placed on support
        // {anchor 1, anchor 0}, gamma must be (-0.3, 0.5, 0, 0) up to the
        // slot order the nearest-anchor rule fixes
        let dict = line_dict();
        let pool = Tensor::matrix(1, 1, vec![1.0]).unwrap();
        let mut s =
            LccSampler::with_pool(&dict, pool, &SamplerConfig::new(2, 7)).unwrap();
        let c = s.sample_coding();
        // whatever the draw, exactly the two support slots carry the z values
        let nz: Vec<f64> = c.support().iter().map(|&j| c.gamma()[j]).collect();
        assert_eq!(nz.len(), 2);
        assert!(nz.iter().all(|v| *v != 0.0));
        assert_eq!(c.origin, CodingOrigin::Sampled);
    }

    #[test]
    fn standard_prior_weights_look_standard_normal() {
        let dict = line_dict();
        let mut s = LccSampler::new(&dict, &SamplerConfig::new(2, 1)).unwrap();
        let n = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let c = s.sample_coding();
            for &j in c.support() {
                sum += c.gamma()[j];
                sumsq += c.gamma()[j] * c.gamma()[j];
            }
        }
        let count = (2 * n) as f64;
        let mean = sum / count;
        let var = sumsq / count - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn normalized_prior_sums_to_one() {
        let dict = line_dict();
        let cfg = SamplerConfig {
            d: 3,
            prior: PriorMode::NormalizedGaussian,
            seed: 2,
        };
        let mut s = LccSampler::new(&dict, &cfg).unwrap();
        for _ in 0..500 {
            let c = s.sample_coding();
            assert!((c.sum() - 1.0).abs() < 1e-9, "sum {}", c.sum());
        }
    }

    #[test]
    fn every_anchor_is_eventually_a_seed() {
        let dict = line_dict();
        let mut s = LccSampler::new(&dict, &SamplerConfig::new(1, 3)).unwrap();
        let mut hit = [false; 4];
        for _ in 0..10_000 {
            let c = s.sample_coding();
            hit[c.support()[0]] = true;
        }
        assert!(hit.iter().all(|&h| h), "seed coverage {hit:?}");
    }

    #[test]
    fn support_size_matches_d() {
        let dict = line_dict();
        for d in 1..=4 {
            let mut s = LccSampler::new(&dict, &SamplerConfig::new(d, 5)).unwrap();
            for _ in 0..50 {
                let c = s.sample_coding();
                assert_eq!(c.support().len(), d);
            }
        }
    }

    #[test]
    fn sampled_support_is_local() {
        // the d-support of any draw is exactly the d nearest anchors to some
        // pool point; with the anchor pool this means far anchors never mix
        let dict = line_dict();
        let mut s = LccSampler::new(&dict, &SamplerConfig::new(2, 8)).unwrap();
        for _ in 0..200 {
            let c = s.sample_coding();
            // anchor 9 only ever co-occurs with anchor 2, its nearest peer
            if c.gamma()[3] != 0.0 {
                assert_eq!(c.support(), &[2, 3]);
            }
        }
    }

    #[test]
    fn rejects_oversized_support() {
        let dict = line_dict();
        assert!(LccSampler::new(&dict, &SamplerConfig::new(5, 0)).is_err());
        assert!(LccSampler::new(&dict, &SamplerConfig::new(0, 0)).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let dict = line_dict();
        let mut a = LccSampler::new(&dict, &SamplerConfig::new(2, 42)).unwrap();
        let mut b = LccSampler::new(&dict, &SamplerConfig::new(2, 42)).unwrap();
        for _ in 0..20 {
            assert_eq!(a.sample_coding(), b.sample_coding());
        }
    }

    #[test]
    fn latents_match_reconstructions() {
        let dict = line_dict();
        let mut s = LccSampler::new(&dict, &SamplerConfig::new(2, 9)).unwrap();
        let (codings, latents) = s.sample_batch_with_latents(16).unwrap();
        for (i, c) in codings.iter().enumerate() {
            let r = reconstruct(&dict, c).unwrap();
            assert_eq!(latents.row(i), &r[..]);
        }
    }
}
