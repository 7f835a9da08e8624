//! Adversarial training on top of the anchor dictionary.
//!
//! The generator never sees a raw coding: every coding `gamma` is collapsed
//! through the fixed anchor matrix to the latent point `V*gamma` first, and
//! the trainable network maps that latent point to data space. One training
//! iteration is one discriminator ascent step on
//! `(1/n) sum phi(D(x)) + (1/n) sum phi(1 - D(G(gamma)))`
//! followed by one generator descent step on the second term, each with a
//! freshly drawn batch of codings.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::graph::{Graph, NodeId};
use crate::lcc::{reconstruct, Coding, Dictionary};
use crate::nn::{forward, forward_on, he_init, Activation, NetGrads, NetworkParams};
use crate::optim::{adam_step, AdamState};
use crate::sampler::{LccSampler, PriorMode, SamplerConfig};
use crate::tensor::Tensor;

/// Concave reshaping of discriminator outputs. `Log` clamps into
/// `[1e-7, 1 - 1e-7]` before taking the logarithm so the objective stays
/// finite at saturated discriminator outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    Log,
    Identity,
}

pub const PHI_CLAMP: f64 = 1e-7;

impl Phi {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Phi::Log => x.clamp(PHI_CLAMP, 1.0 - PHI_CLAMP).ln(),
            Phi::Identity => x,
        }
    }

    fn apply_on(&self, graph: &mut Graph, x: NodeId) -> NodeId {
        match self {
            Phi::Log => {
                let c = graph.clamp(x, PHI_CLAMP, 1.0 - PHI_CLAMP);
                graph.ln(c)
            }
            Phi::Identity => x,
        }
    }
}

/// Where generator inputs come from during training.
#[derive(Debug, Clone)]
pub enum GanPrior {
    /// Codings drawn around the anchors; the generator input dimension is the
    /// latent dimension of the dictionary.
    LccCodings { support_size: usize, mode: PriorMode },
    /// Baseline: `z ~ N(0, I_d)` pushed through a trainable linear layer into
    /// the latent dimension, then the same generator body.
    GaussianAdapter { d: usize },
}

#[derive(Debug, Clone)]
pub struct GanConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_width: usize,
    pub phi: Phi,
    pub prior: GanPrior,
    pub seed: u64,
}

impl GanConfig {
    pub fn new(iterations: usize, support_size: usize, seed: u64) -> Self {
        Self {
            iterations,
            batch_size: 64,
            learning_rate: 2e-4,
            hidden_width: 128,
            phi: Phi::Log,
            prior: GanPrior::LccCodings {
                support_size,
                mode: PriorMode::StandardGaussian,
            },
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GanModel {
    /// Maps latent points (`V*gamma` or adapted noise) to data space.
    pub generator: NetworkParams,
    pub discriminator: NetworkParams,
    pub phi: Phi,
}

impl GanModel {
    /// `G(V*gamma)` for a batch of codings against a dictionary.
    pub fn generate(&self, dict: &Dictionary, codings: &[Coding]) -> Result<Tensor> {
        let d = dict.latent_dim();
        let mut flat = Vec::with_capacity(codings.len() * d);
        for c in codings {
            flat.extend(reconstruct(dict, c)?);
        }
        let latents = Tensor::matrix(codings.len(), d, flat)?;
        self.generate_from_latents(&latents)
    }

    pub fn generate_from_latents(&self, latents: &Tensor) -> Result<Tensor> {
        forward(&self.generator, latents)
    }

    pub fn discriminate(&self, x: &Tensor) -> Result<Tensor> {
        forward(&self.discriminator, x)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GanCheckpoint {
    pub generator: crate::checkpoint::NetworkCheckpoint,
    pub discriminator: crate::checkpoint::NetworkCheckpoint,
    pub phi: Phi,
}

impl GanCheckpoint {
    pub fn from_model(model: &GanModel) -> Self {
        Self {
            generator: crate::checkpoint::NetworkCheckpoint::from_params(&model.generator),
            discriminator: crate::checkpoint::NetworkCheckpoint::from_params(&model.discriminator),
            phi: model.phi,
        }
    }

    pub fn into_model(self) -> Result<GanModel> {
        Ok(GanModel {
            generator: self.generator.into_params()?,
            discriminator: self.discriminator.into_params()?,
            phi: self.phi,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GanLogEntry {
    pub iteration: usize,
    /// Value of the full two-term objective at the discriminator step.
    pub disc_objective: f64,
    /// Value of the generator term at the generator step.
    pub gen_objective: f64,
}

/// Writes one JSON object per line.
pub fn write_train_log(entries: &[GanLogEntry], path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for e in entries {
        writeln!(out, "{}", serde_json::to_string(e)?)?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct GanTrainResult {
    pub model: GanModel,
    pub log: Vec<GanLogEntry>,
}

fn check_finite(label: &str, iteration: usize, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(LccError::Diverged(format!(
            "{label} became {value} at iteration {iteration}"
        )));
    }
    Ok(())
}

/// Both objective terms at the current parameters, without stepping.
pub fn adversarial_objective(model: &GanModel, real: &Tensor, fake_latents: &Tensor) -> Result<f64> {
    let d_real = model.discriminate(real)?;
    let gen_out = model.generate_from_latents(fake_latents)?;
    let d_fake = model.discriminate(&gen_out)?;
    let n_r = d_real.len() as f64;
    let n_f = d_fake.len() as f64;
    let term_real: f64 = d_real.data().iter().map(|&v| model.phi.apply(v)).sum::<f64>() / n_r;
    let term_fake: f64 = d_fake
        .data()
        .iter()
        .map(|&v| model.phi.apply(1.0 - v))
        .sum::<f64>()
        / n_f;
    Ok(term_real + term_fake)
}

/// One ascent step on the discriminator. Returns the objective value before
/// the step.
pub fn disc_step(
    model: &mut GanModel,
    real: &Tensor,
    fake_latents: &Tensor,
    state: &mut AdamState,
    iteration: usize,
) -> Result<f64> {
    let mut graph = Graph::new();
    let xid = graph.leaf(real.clone());
    let zid = graph.leaf(fake_latents.clone());
    let disc_real = forward_on(&mut graph, &model.discriminator, xid)?;
    let gen_nodes = forward_on(&mut graph, &model.generator, zid)?;
    let disc_fake = forward_on(&mut graph, &model.discriminator, gen_nodes.output)?;

    let phi_real = model.phi.apply_on(&mut graph, disc_real.output);
    let one_minus = graph.sub_from(1.0, disc_fake.output);
    let phi_fake = model.phi.apply_on(&mut graph, one_minus);
    let m_real = graph.mean(phi_real);
    let m_fake = graph.mean(phi_fake);
    let objective = graph.add(m_real, m_fake)?;

    let value = graph.value(objective).item()?;
    check_finite("discriminator objective", iteration, value)?;

    let grads = graph.backward(objective)?;
    let mut dgrads = NetGrads::extract(&grads, &disc_real);
    dgrads.add_assign(&NetGrads::extract(&grads, &disc_fake));
    check_finite("discriminator gradient", iteration, dgrads.max_abs())?;
    adam_step(&mut model.discriminator, &dgrads, state, -1.0);
    Ok(value)
}

/// One descent step on the generator. Returns the generator term before the
/// step.
pub fn gen_step(
    model: &mut GanModel,
    fake_latents: &Tensor,
    state: &mut AdamState,
    iteration: usize,
) -> Result<f64> {
    let mut graph = Graph::new();
    let zid = graph.leaf(fake_latents.clone());
    let gen_nodes = forward_on(&mut graph, &model.generator, zid)?;
    let disc_fake = forward_on(&mut graph, &model.discriminator, gen_nodes.output)?;
    let one_minus = graph.sub_from(1.0, disc_fake.output);
    let phi_fake = model.phi.apply_on(&mut graph, one_minus);
    let objective = graph.mean(phi_fake);

    let value = graph.value(objective).item()?;
    check_finite("generator objective", iteration, value)?;

    let grads = graph.backward(objective)?;
    let ggrads = NetGrads::extract(&grads, &gen_nodes);
    check_finite("generator gradient", iteration, ggrads.max_abs())?;
    adam_step(&mut model.generator, &ggrads, state, 1.0);
    Ok(value)
}

fn init_model(data_dim: usize, latent_dim: usize, cfg: &GanConfig) -> Result<GanModel> {
    let w = cfg.hidden_width;
    let generator = match cfg.prior {
        GanPrior::LccCodings { .. } => he_init(
            &[latent_dim, w, w, data_dim],
            &[Activation::Tanh, Activation::Tanh, Activation::Tanh],
            cfg.seed,
        )?,
        GanPrior::GaussianAdapter { d } => he_init(
            &[d, latent_dim, w, w, data_dim],
            &[
                Activation::Identity,
                Activation::Tanh,
                Activation::Tanh,
                Activation::Tanh,
            ],
            cfg.seed,
        )?,
    };
    let discriminator = he_init(
        &[data_dim, w, w, 1],
        &[Activation::Tanh, Activation::Tanh, Activation::Sigmoid],
        cfg.seed.wrapping_add(1),
    )?;
    Ok(GanModel {
        generator,
        discriminator,
        phi: cfg.phi,
    })
}

enum LatentSource<'a> {
    Lcc(LccSampler<'a>),
    Gaussian { d: usize, rng: ChaCha12Rng },
}

impl LatentSource<'_> {
    fn batch(&mut self, n: usize) -> Result<Tensor> {
        match self {
            LatentSource::Lcc(sampler) => {
                let (_, latents) = sampler.sample_batch_with_latents(n)?;
                Ok(latents)
            }
            LatentSource::Gaussian { d, rng } => {
                let normal = Normal::new(0.0, 1.0).unwrap();
                let flat: Vec<f64> = (0..n * *d).map(|_| normal.sample(rng)).collect();
                Tensor::matrix(n, *d, flat)
            }
        }
    }
}

/// Trains a generator/discriminator pair against a real dataset, drawing
/// generator inputs from the configured prior. On divergence the model is
/// snapshotted to `snapshot_path` (when given) before the error is returned.
pub fn gan_train(
    real: &Tensor,
    dict: &Dictionary,
    cfg: &GanConfig,
    snapshot_path: Option<&Path>,
) -> Result<GanTrainResult> {
    let n = real.rows();
    if n == 0 {
        return Err(LccError::Config("empty training set".into()));
    }
    if cfg.batch_size == 0 {
        return Err(LccError::Config("batch size must be positive".into()));
    }
    let data_dim = real.cols();
    let latent_dim = dict.latent_dim();
    let mut model = init_model(data_dim, latent_dim, cfg)?;

    let mut source = match &cfg.prior {
        GanPrior::LccCodings { support_size, mode } => {
            let scfg = SamplerConfig {
                d: *support_size,
                prior: *mode,
                seed: cfg.seed.wrapping_add(2),
            };
            LatentSource::Lcc(LccSampler::new(dict, &scfg)?)
        }
        GanPrior::GaussianAdapter { d } => LatentSource::Gaussian {
            d: *d,
            rng: ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(2)),
        },
    };

    let mut disc_state = AdamState::new(&model.discriminator, cfg.learning_rate);
    let mut gen_state = AdamState::new(&model.generator, cfg.learning_rate);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_add(3));
    let batch = cfg.batch_size.min(n);

    let mut log = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let mut flat = Vec::with_capacity(batch * data_dim);
        for _ in 0..batch {
            flat.extend_from_slice(real.row(rng.gen_range(0..n)));
        }
        let real_batch = Tensor::from_parts_unchecked(vec![batch, data_dim], flat);

        let step = (|| -> Result<GanLogEntry> {
            let latents = source.batch(batch)?;
            let disc_objective = disc_step(&mut model, &real_batch, &latents, &mut disc_state, iteration)?;
            // fresh draw between the two updates
            let latents = source.batch(batch)?;
            let gen_objective = gen_step(&mut model, &latents, &mut gen_state, iteration)?;
            Ok(GanLogEntry { iteration, disc_objective, gen_objective })
        })();
        match step {
            Ok(entry) => log.push(entry),
            Err(e) => {
                if let Some(path) = snapshot_path {
                    crate::checkpoint::save_json(&GanCheckpoint::from_model(&model), path)?;
                }
                return Err(e);
            }
        }
    }
    Ok(GanTrainResult { model, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcc::CodingOrigin;

    fn square_dict() -> Dictionary {
        Dictionary::new(
            Tensor::matrix(4, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn tiny_model(data_dim: usize, latent_dim: usize, seed: u64) -> GanModel {
        GanModel {
            generator: he_init(
                &[latent_dim, 8, data_dim],
                &[Activation::Tanh, Activation::Tanh],
                seed,
            )
            .unwrap(),
            discriminator: he_init(
                &[data_dim, 8, 1],
                &[Activation::Tanh, Activation::Sigmoid],
                seed + 1,
            )
            .unwrap(),
            phi: Phi::Log,
        }
    }

    fn ring_data(n: usize) -> Tensor {
        let mut flat = Vec::with_capacity(n * 2);
        for i in 0..n {
            let t = i as f64 / n as f64 * std::f64::consts::TAU;
            flat.push(0.8 * t.cos());
            flat.push(0.8 * t.sin());
        }
        Tensor::matrix(n, 2, flat).unwrap()
    }

    #[test]
    fn one_hot_coding_maps_to_image_of_its_anchor() {
        let dict = square_dict();
        let model = tiny_model(2, 2, 0);
        for j in 0..4 {
            let c = Coding::one_hot(4, j, CodingOrigin::Sampled);
            let via_coding = model.generate(&dict, &[c]).unwrap();
            let anchor = Tensor::matrix(1, 2, dict.anchor(j).to_vec()).unwrap();
            let direct = model.generate_from_latents(&anchor).unwrap();
            assert_eq!(via_coding, direct);
        }
    }

    #[test]
    fn outputs_depend_only_on_the_latent_product() {
        // permuting anchors and counter-permuting the coding leaves V*gamma,
        // and hence the generated batch, unchanged
        let dict = square_dict();
        let perm = [2usize, 0, 3, 1];
        let mut panchors = Vec::new();
        for &p in &perm {
            panchors.extend_from_slice(dict.anchor(p));
        }
        let pdict = Dictionary::new(Tensor::matrix(4, 2, panchors).unwrap(), 1.0, 1.0).unwrap();

        let gamma = vec![0.4, -0.2, 0.5, 0.3];
        let mut pgamma = vec![0.0; 4];
        for (slot, &p) in perm.iter().enumerate() {
            pgamma[slot] = gamma[p];
        }
        let model = tiny_model(2, 2, 5);
        let a = model
            .generate(&dict, &[Coding::new(gamma, CodingOrigin::Sampled)])
            .unwrap();
        let b = model
            .generate(&pdict, &[Coding::new(pgamma, CodingOrigin::Sampled)])
            .unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn disc_step_leaves_generator_untouched() {
        let mut model = tiny_model(2, 2, 1);
        let gen_before = model.generator.clone();
        let real = ring_data(8);
        let latents = Tensor::matrix(8, 2, vec![0.1; 16]).unwrap();
        let mut state = AdamState::with_defaults(&model.discriminator);
        disc_step(&mut model, &real, &latents, &mut state, 0).unwrap();
        assert_eq!(model.generator, gen_before);
        assert_ne!(model.discriminator, tiny_model(2, 2, 1).discriminator);
    }

    #[test]
    fn gen_step_leaves_discriminator_untouched() {
        let mut model = tiny_model(2, 2, 2);
        let disc_before = model.discriminator.clone();
        let latents = Tensor::matrix(8, 2, vec![0.2; 16]).unwrap();
        let mut state = AdamState::with_defaults(&model.generator);
        gen_step(&mut model, &latents, &mut state, 0).unwrap();
        assert_eq!(model.discriminator, disc_before);
    }

    #[test]
    fn ascent_step_raises_the_disc_objective() {
        let mut model = tiny_model(2, 2, 3);
        let real = ring_data(32);
        let latents = Tensor::matrix(32, 2, (0..64).map(|i| (i as f64) * 0.01 - 0.3).collect())
            .unwrap();
        let mut state = AdamState::new(&model.discriminator, 1e-3);
        let before = adversarial_objective(&model, &real, &latents).unwrap();
        for it in 0..5 {
            disc_step(&mut model, &real, &latents, &mut state, it).unwrap();
        }
        let after = adversarial_objective(&model, &real, &latents).unwrap();
        assert!(after > before, "{before} -> {after}");
    }

    #[test]
    fn constant_half_discriminator_scores_two_log_half() {
        // zero-weight sigmoid discriminator outputs exactly 0.5 everywhere
        let mut model = tiny_model(2, 2, 4);
        model.discriminator = NetworkParams::new(vec![crate::nn::Layer {
            weight: Tensor::zeros(vec![2, 1]),
            bias: Tensor::zeros(vec![1]),
            activation: Activation::Sigmoid,
        }])
        .unwrap();
        let real = ring_data(16);
        let latents = Tensor::matrix(4, 2, vec![0.3; 8]).unwrap();
        let v = adversarial_objective(&model, &real, &latents).unwrap();
        let expect = 2.0 * 0.5f64.ln();
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
    }

    #[test]
    fn generator_gradients_match_finite_differences() {
        let model = tiny_model(2, 2, 6);
        let latents = Tensor::matrix(4, 2, vec![0.1, -0.2, 0.3, 0.0, -0.4, 0.2, 0.05, 0.15])
            .unwrap();

        // analytic gradient of the generator term
        let mut graph = Graph::new();
        let zid = graph.leaf(latents.clone());
        let gen_nodes = forward_on(&mut graph, &model.generator, zid).unwrap();
        let disc_fake = forward_on(&mut graph, &model.discriminator, gen_nodes.output).unwrap();
        let one_minus = graph.sub_from(1.0, disc_fake.output);
        let phi_fake = model.phi.apply_on(&mut graph, one_minus);
        let objective = graph.mean(phi_fake);
        let grads = graph.backward(objective).unwrap();
        let ggrads = NetGrads::extract(&grads, &gen_nodes);

        let eval = |net: &NetworkParams| -> f64 {
            let m = GanModel {
                generator: net.clone(),
                discriminator: model.discriminator.clone(),
                phi: model.phi,
            };
            let out = m.generate_from_latents(&latents).unwrap();
            let d = m.discriminate(&out).unwrap();
            d.data().iter().map(|&v| m.phi.apply(1.0 - v)).sum::<f64>() / d.len() as f64
        };

        let eps = 1e-6;
        for (li, probe) in [(0usize, 3usize), (0, 7), (1, 2), (1, 9)] {
            let mut plus = model.generator.clone();
            plus.layers_mut()[li].weight.data_mut()[probe] += eps;
            let mut minus = model.generator.clone();
            minus.layers_mut()[li].weight.data_mut()[probe] -= eps;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * eps);
            let an = ggrads.layers[li].0.data()[probe];
            assert!(
                (fd - an).abs() < 1e-6 * (1.0 + fd.abs()),
                "layer {li} param {probe}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn discriminator_gradients_match_finite_differences() {
        let model = tiny_model(2, 2, 7);
        let real = ring_data(4);
        let latents = Tensor::matrix(4, 2, vec![0.2, 0.1, -0.3, 0.4, 0.0, -0.1, 0.25, -0.25])
            .unwrap();

        let mut graph = Graph::new();
        let xid = graph.leaf(real.clone());
        let zid = graph.leaf(latents.clone());
        let disc_real = forward_on(&mut graph, &model.discriminator, xid).unwrap();
        let gen_nodes = forward_on(&mut graph, &model.generator, zid).unwrap();
        let disc_fake = forward_on(&mut graph, &model.discriminator, gen_nodes.output).unwrap();
        let phi_real = model.phi.apply_on(&mut graph, disc_real.output);
        let one_minus = graph.sub_from(1.0, disc_fake.output);
        let phi_fake = model.phi.apply_on(&mut graph, one_minus);
        let m_real = graph.mean(phi_real);
        let m_fake = graph.mean(phi_fake);
        let objective = graph.add(m_real, m_fake).unwrap();
        let grads = graph.backward(objective).unwrap();
        let mut dgrads = NetGrads::extract(&grads, &disc_real);
        dgrads.add_assign(&NetGrads::extract(&grads, &disc_fake));

        let eval = |net: &NetworkParams| -> f64 {
            let m = GanModel {
                generator: model.generator.clone(),
                discriminator: net.clone(),
                phi: model.phi,
            };
            adversarial_objective(&m, &real, &latents).unwrap()
        };

        let eps = 1e-6;
        for (li, probe) in [(0usize, 0usize), (0, 5), (1, 1), (1, 6)] {
            let mut plus = model.discriminator.clone();
            plus.layers_mut()[li].weight.data_mut()[probe] += eps;
            let mut minus = model.discriminator.clone();
            minus.layers_mut()[li].weight.data_mut()[probe] -= eps;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * eps);
            let an = dgrads.layers[li].0.data()[probe];
            assert!(
                (fd - an).abs() < 1e-6 * (1.0 + fd.abs()),
                "layer {li} param {probe}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn zero_iterations_returns_the_initialization() {
        let dict = square_dict();
        let real = ring_data(16);
        let cfg = GanConfig::new(0, 2, 9);
        let res = gan_train(&real, &dict, &cfg, None).unwrap();
        let fresh = init_model(2, 2, &cfg).unwrap();
        assert_eq!(res.model.generator, fresh.generator);
        assert_eq!(res.model.discriminator, fresh.discriminator);
        assert!(res.log.is_empty());
    }

    #[test]
    fn training_is_deterministic_under_seed() {
        let dict = square_dict();
        let real = ring_data(32);
        let mut cfg = GanConfig::new(5, 2, 11);
        cfg.batch_size = 16;
        let a = gan_train(&real, &dict, &cfg, None).unwrap();
        let b = gan_train(&real, &dict, &cfg, None).unwrap();
        assert_eq!(a.model.generator, b.model.generator);
        assert_eq!(a.model.discriminator, b.model.discriminator);
        for (x, y) in a.log.iter().zip(&b.log) {
            assert_eq!(x.disc_objective, y.disc_objective);
            assert_eq!(x.gen_objective, y.gen_objective);
        }
    }

    #[test]
    fn log_has_one_finite_entry_per_iteration() {
        let dict = square_dict();
        let real = ring_data(32);
        let mut cfg = GanConfig::new(8, 2, 12);
        cfg.batch_size = 16;
        let res = gan_train(&real, &dict, &cfg, None).unwrap();
        assert_eq!(res.log.len(), 8);
        for (i, e) in res.log.iter().enumerate() {
            assert_eq!(e.iteration, i);
            assert!(e.disc_objective.is_finite());
            assert!(e.gen_objective.is_finite());
        }
    }

    #[test]
    fn gaussian_adapter_prior_trains_with_adapter_layer() {
        let dict = square_dict();
        let real = ring_data(32);
        let mut cfg = GanConfig::new(3, 2, 13);
        cfg.batch_size = 8;
        cfg.prior = GanPrior::GaussianAdapter { d: 3 };
        let res = gan_train(&real, &dict, &cfg, None).unwrap();
        assert_eq!(res.model.generator.in_dim(), 3);
        assert_eq!(res.model.generator.layers()[0].out_dim(), 2);
        assert_eq!(
            res.model.generator.layers()[0].activation,
            Activation::Identity
        );
    }

    #[test]
    fn poisoned_weights_are_reported_as_divergence() {
        let mut model = tiny_model(2, 2, 14);
        model.generator.layers_mut()[0].weight =
            Tensor::from_parts_unchecked(vec![2, 8], vec![f64::NAN; 16]);
        let latents = Tensor::matrix(4, 2, vec![0.1; 8]).unwrap();
        let mut state = AdamState::with_defaults(&model.generator);
        let err = gen_step(&mut model, &latents, &mut state, 0).unwrap_err();
        assert!(matches!(err, LccError::Diverged(_)), "{err:?}");
    }

    #[test]
    fn divergence_snapshot_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snapshot.json");
        let dict = square_dict();
        // poison the real data so the first disc step sees NaN
        let real = Tensor::from_parts_unchecked(vec![4, 2], vec![f64::NAN; 8]);
        let cfg = GanConfig::new(2, 2, 15);
        let err = gan_train(&real, &dict, &cfg, Some(&path)).unwrap_err();
        assert!(matches!(err, LccError::Diverged(_)), "{err:?}");
        let ckpt: GanCheckpoint = crate::checkpoint::load_json(&path).unwrap();
        assert!(ckpt.into_model().is_ok());
    }

    #[test]
    fn train_log_round_trips_as_json_lines() {
        let entries = vec![
            GanLogEntry { iteration: 0, disc_objective: -1.5, gen_objective: -0.7 },
            GanLogEntry { iteration: 1, disc_objective: -1.4, gen_objective: -0.69 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        write_train_log(&entries, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let back: GanLogEntry = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(back.iteration, 1);
        assert_eq!(back.disc_objective, -1.4);
    }

    #[test]
    fn phi_log_is_clamped_at_the_edges() {
        assert_eq!(Phi::Log.apply(0.0), PHI_CLAMP.ln());
        assert_eq!(Phi::Log.apply(1.0), (1.0 - PHI_CLAMP).ln());
        assert_eq!(Phi::Identity.apply(0.37), 0.37);
    }
}
