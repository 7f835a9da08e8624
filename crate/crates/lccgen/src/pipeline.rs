//! End-to-end experiment orchestration: dataset construction, the four
//! training/evaluation stages, artifact persistence and the manifest.
//!
//! Every stage is a pure function of the configuration plus the checkpoints
//! already on disk, so stages can run in one process (`run_pipeline`) or as
//! separate invocations. Re-running a stage with the same inputs reproduces
//! its outputs byte for byte: all randomness is seeded and no wall-clock
//! values enter any artifact.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autoencoder::{embed, reconstruction_mse, train_ae, AeCheckpoint, AeTrainConfig, AutoEncoder};
use crate::checkpoint::{load_json, save_json};
use crate::config::{DatasetKind, ExperimentConfig, PriorChoice};
use crate::data::{generate, load_idx, split, synthetic_digits, Dataset};
use crate::error::{LccError, Result};
use crate::gan::{gan_train, GanCheckpoint, GanConfig, GanModel, GanPrior, Phi};
use crate::lcc::{codings_to_csv, learn_dictionary, Dictionary, DictionaryCheckpoint, LccConfig};
use crate::metrics::{
    diversity_msssim, estimate_nn_distance, gap_harness, gap_report_csv, mode_coverage,
    CoverageReport, DiscClass, GapConfig, GapReport, GAP_CSV_HEADER,
};
use crate::sampler::{LccSampler, SamplerConfig};
use crate::tensor::Tensor;

pub const CONFIG_FILE: &str = "config.txt";
pub const AE_FILE: &str = "ae.json";
pub const AE_LOSS_FILE: &str = "ae_loss.csv";
pub const DICT_FILE: &str = "dictionary.json";
pub const LCC_TRACE_FILE: &str = "lcc_trace.csv";
pub const CODINGS_FILE: &str = "codings.csv";
pub const RECON_VS_ANCHORS_FILE: &str = "recon_vs_anchors.csv";
pub const LCC_SUMMARY_FILE: &str = "lcc_summary.json";
pub const GAN_FILE: &str = "gan.json";
pub const GAN_LOG_FILE: &str = "gan_log.jsonl";
pub const GAN_LOSS_FILE: &str = "gan_loss.csv";
pub const GAN_SNAPSHOT_FILE: &str = "gan_diverged.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const SAMPLES_CSV_FILE: &str = "samples.csv";
pub const SAMPLES_PGM_FILE: &str = "samples.pgm";
pub const GAP_JSON_FILE: &str = "gap.json";
pub const GAP_CSV_FILE: &str = "gap.csv";
pub const MANIFEST_FILE: &str = "MANIFEST";

/// Fixed artifact order for the manifest; hashing walks this list.
const ARTIFACTS: [&str; 16] = [
    CONFIG_FILE,
    AE_FILE,
    AE_LOSS_FILE,
    DICT_FILE,
    LCC_TRACE_FILE,
    CODINGS_FILE,
    RECON_VS_ANCHORS_FILE,
    LCC_SUMMARY_FILE,
    GAN_FILE,
    GAN_LOG_FILE,
    GAN_LOSS_FILE,
    GAN_SNAPSHOT_FILE,
    METRICS_FILE,
    SAMPLES_CSV_FILE,
    SAMPLES_PGM_FILE,
    GAP_JSON_FILE,
];

// seed offsets keeping the stages' random streams disjoint
const SEED_SPLIT: u64 = 101;
const SEED_AE: u64 = 211;
const SEED_LCC: u64 = 307;
const SEED_GAN: u64 = 401;
const SEED_SAMPLE: u64 = 503;
const SEED_EVAL: u64 = 601;
const SEED_GAP: u64 = 701;

/// Builds the configured dataset and splits it into train/heldout. A pure
/// function of the configuration, so every stage can rebuild the same split
/// instead of persisting the data.
pub fn build_dataset(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let ds = match cfg.dataset.kind {
        DatasetKind::Digits => synthetic_digits(cfg.dataset.n, cfg.seed)?,
        DatasetKind::Idx => {
            let images = cfg.dataset.images.as_ref().ok_or_else(|| {
                LccError::Config("dataset.images required for idx data".into())
            })?;
            let labels = cfg.dataset.labels.as_ref().ok_or_else(|| {
                LccError::Config("dataset.labels required for idx data".into())
            })?;
            load_idx(images, labels, cfg.dataset.side)?
        }
        _ => {
            let spec = cfg.manifold_spec().expect("synthetic kind");
            generate(&spec, cfg.dataset.n)?
        }
    };
    let ds = ds.normalize();
    split(&ds, cfg.dataset.train_fraction, cfg.seed.wrapping_add(SEED_SPLIT))
}

fn is_image_data(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.dataset.kind, DatasetKind::Digits | DatasetKind::Idx)
}

fn image_side(cfg: &ExperimentConfig) -> usize {
    match cfg.dataset.kind {
        DatasetKind::Digits => 8,
        _ => cfg.dataset.side,
    }
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn ensure_out(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    Ok(())
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Trains the autoencoder on the train split; writes the checkpoint and the
/// per-epoch loss curve.
pub fn stage_train_ae(cfg: &ExperimentConfig) -> Result<()> {
    ensure_out(cfg)?;
    let (train, _) = build_dataset(cfg)?;
    let mut tc = AeTrainConfig::new(cfg.ae.latent_dim, cfg.ae.epochs, cfg.seed.wrapping_add(SEED_AE));
    tc.hidden_width = cfg.ae.hidden_width;
    tc.learning_rate = cfg.ae.learning_rate;
    let res = train_ae(&train, &tc)?;
    save_json(&AeCheckpoint::from_ae(&res.ae), &out_path(cfg, AE_FILE))?;
    let rows: Vec<String> = res
        .loss_curve
        .iter()
        .enumerate()
        .map(|(e, l)| format!("{e},{l}"))
        .collect();
    write_csv(&out_path(cfg, AE_LOSS_FILE), "epoch,reconstruction_mse", &rows)?;
    Ok(())
}

fn load_ae(cfg: &ExperimentConfig) -> Result<AutoEncoder> {
    load_json::<AeCheckpoint>(&out_path(cfg, AE_FILE))?.into_ae()
}

fn load_dict(cfg: &ExperimentConfig) -> Result<Dictionary> {
    load_json::<DictionaryCheckpoint>(&out_path(cfg, DICT_FILE))?.into_dictionary()
}

fn load_gan(cfg: &ExperimentConfig) -> Result<GanModel> {
    load_json::<GanCheckpoint>(&out_path(cfg, GAN_FILE))?.into_model()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LccSummary {
    pub num_anchors: usize,
    pub final_objective: f64,
    pub final_unsquared_objective: f64,
    pub mean_reconstruction_error: f64,
    pub outer_iters: usize,
}

/// Learns anchor dictionaries on the embedded train split. The configured
/// anchor count produces the persisted dictionary; two smaller counts are
/// fitted as well to chart reconstruction error against dictionary size.
pub fn stage_learn_lcc(cfg: &ExperimentConfig) -> Result<()> {
    ensure_out(cfg)?;
    let ae = load_ae(cfg)?;
    let (train, _) = build_dataset(cfg)?;
    let latents = embed(&ae, &train)?;

    let m = cfg.lcc.anchors;
    let mut m_values = vec![(m / 4).max(2), (m / 2).max(2), m];
    m_values.dedup();
    let mut recon_rows = Vec::new();
    let mut main = None;
    for &mi in &m_values {
        let mut lc = LccConfig::new(mi, cfg.lcc.outer_iters, cfg.seed.wrapping_add(SEED_LCC));
        lc.l_h = cfg.lcc.l_h;
        lc.l_g = cfg.lcc.l_g;
        let res = learn_dictionary(&latents, &lc)?;
        recon_rows.push(format!("{mi},{}", res.mean_reconstruction_error));
        if mi == m {
            main = Some(res);
        }
    }
    let res = main.expect("configured anchor count always fitted");

    save_json(
        &DictionaryCheckpoint::from_dictionary(&res.dictionary),
        &out_path(cfg, DICT_FILE),
    )?;
    codings_to_csv(&res.codings, &out_path(cfg, CODINGS_FILE))?;
    let trace_rows: Vec<String> = res
        .objective_trace
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{i},{v}"))
        .collect();
    write_csv(&out_path(cfg, LCC_TRACE_FILE), "outer_iter,objective", &trace_rows)?;
    write_csv(
        &out_path(cfg, RECON_VS_ANCHORS_FILE),
        "num_anchors,mean_reconstruction_error",
        &recon_rows,
    )?;
    save_json(
        &LccSummary {
            num_anchors: m,
            final_objective: *res.objective_trace.last().expect("non-empty trace"),
            final_unsquared_objective: res.final_unsquared_objective,
            mean_reconstruction_error: res.mean_reconstruction_error,
            outer_iters: cfg.lcc.outer_iters,
        },
        &out_path(cfg, LCC_SUMMARY_FILE),
    )?;
    Ok(())
}

/// Trains the adversarial pair on the train split, drawing generator inputs
/// from the configured prior. On divergence the partial model is snapshotted
/// before the error propagates.
pub fn stage_train_gan(cfg: &ExperimentConfig) -> Result<()> {
    ensure_out(cfg)?;
    let dict = load_dict(cfg)?;
    let (train, _) = build_dataset(cfg)?;

    let mut gc = GanConfig::new(cfg.gan.iterations, cfg.sampler.d, cfg.seed.wrapping_add(SEED_GAN));
    gc.batch_size = cfg.gan.batch_size;
    gc.learning_rate = cfg.gan.learning_rate;
    gc.hidden_width = cfg.gan.hidden_width;
    gc.phi = cfg.gan.phi;
    gc.prior = match cfg.sampler.prior {
        PriorChoice::GaussianD => GanPrior::GaussianAdapter { d: cfg.sampler.d },
        _ => GanPrior::LccCodings {
            support_size: cfg.sampler.d,
            mode: cfg.prior_mode(),
        },
    };

    let snapshot = out_path(cfg, GAN_SNAPSHOT_FILE);
    let res = gan_train(&train.samples, &dict, &gc, Some(&snapshot))?;
    save_json(&GanCheckpoint::from_model(&res.model), &out_path(cfg, GAN_FILE))?;
    crate::gan::write_train_log(&res.log, &out_path(cfg, GAN_LOG_FILE))?;
    let rows: Vec<String> = res
        .log
        .iter()
        .map(|e| format!("{},{},{}", e.iteration, e.disc_objective, e.gen_objective))
        .collect();
    write_csv(
        &out_path(cfg, GAN_LOSS_FILE),
        "iteration,disc_objective,gen_objective",
        &rows,
    )?;
    Ok(())
}

/// Draws `n` generator samples through the configured prior.
pub fn draw_samples(
    cfg: &ExperimentConfig,
    model: &GanModel,
    dict: &Dictionary,
    n: usize,
    seed: u64,
) -> Result<Tensor> {
    let latents = match cfg.sampler.prior {
        PriorChoice::GaussianD => {
            let d = cfg.sampler.d;
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 1.0).expect("valid normal");
            let flat: Vec<f64> = (0..n * d).map(|_| normal.sample(&mut rng)).collect();
            Tensor::matrix(n, d, flat)?
        }
        _ => {
            let scfg = SamplerConfig {
                d: cfg.sampler.d,
                prior: cfg.prior_mode(),
                seed,
            };
            let mut sampler = LccSampler::new(&dict, &scfg)?;
            let (_, latents) = sampler.sample_batch_with_latents(n)?;
            latents
        }
    };
    model.generate_from_latents(&latents)
}

/// Samples the trained generator; writes one CSV row per sample and, for
/// image data, a PGM contact sheet.
pub fn stage_sample(cfg: &ExperimentConfig, n: usize) -> Result<Tensor> {
    ensure_out(cfg)?;
    if n == 0 {
        return Err(LccError::Config("need at least one sample".into()));
    }
    let dict = load_dict(cfg)?;
    let model = load_gan(cfg)?;
    let samples = draw_samples(cfg, &model, &dict, n, cfg.seed.wrapping_add(SEED_SAMPLE))?;
    let rows: Vec<String> = (0..samples.rows())
        .map(|i| {
            samples
                .row(i)
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    let mut out = fs::File::create(out_path(cfg, SAMPLES_CSV_FILE))?;
    for row in &rows {
        writeln!(out, "{row}")?;
    }
    if is_image_data(cfg) {
        write_pgm_grid(&samples, image_side(cfg), &out_path(cfg, SAMPLES_PGM_FILE))?;
    }
    Ok(samples)
}

/// Tiles row-major flattened images into one binary PGM; values are mapped
/// from `[-1, 1]` to the 8-bit range.
pub fn write_pgm_grid(samples: &Tensor, side: usize, path: &Path) -> Result<()> {
    let n = samples.rows();
    if n == 0 || side == 0 || samples.cols() != side * side {
        return Err(LccError::Dimension(format!(
            "{} columns cannot tile {side}x{side} images",
            samples.cols()
        )));
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let (w, h) = (cols * side, rows * side);
    let mut pixels = vec![0u8; w * h];
    for (i, tile) in (0..n).enumerate() {
        let (ty, tx) = (i / cols, i % cols);
        for y in 0..side {
            for x in 0..side {
                let v = samples.at(tile, y * side + x);
                let byte = (((v + 1.0) / 2.0).clamp(0.0, 1.0) * 255.0).round() as u8;
                pixels[(ty * side + y) * w + tx * side + x] = byte;
            }
        }
    }
    let mut out = fs::File::create(path)?;
    write!(out, "P5\n{w} {h}\n255\n")?;
    out.write_all(&pixels)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n_generated: usize,
    pub seed: u64,
    pub reconstruction_mse_train: f64,
    pub reconstruction_mse_heldout: f64,
    /// Distance between generated samples and the train split under a small
    /// discriminator class.
    pub nn_distance_generated_vs_train: f64,
    /// Present for datasets with known mode centers.
    pub coverage: Option<CoverageReport>,
    /// Mean pairwise structural similarity of generated images; present for
    /// image data only. Lower means more diverse samples.
    pub diversity_msssim: Option<f64>,
}

/// Transformed mode centers of the ring dataset in normalized coordinates,
/// with the coverage radius set to half the minimum inter-center distance.
fn normalized_centers(cfg: &ExperimentConfig, ds: &Dataset) -> Option<(Tensor, f64)> {
    let spec = cfg.manifold_spec()?;
    let centers = spec.mode_centers()?;
    let norm = ds.normalization.as_ref()?;
    let k = centers.len();
    let d = centers[0].len();
    let mut flat = Vec::with_capacity(k * d);
    for c in &centers {
        for (j, v) in c.iter().enumerate() {
            flat.push((v - norm.shift[j]) / norm.scale[j]);
        }
    }
    let centers = Tensor::from_parts_unchecked(vec![k, d], flat);
    let mut min_dist = f64::INFINITY;
    for i in 0..k {
        for j in (i + 1)..k {
            min_dist = min_dist.min(crate::tensor::dist2(centers.row(i), centers.row(j)));
        }
    }
    let radius = if min_dist.is_finite() { min_dist / 2.0 } else { 1.0 };
    Some((centers, radius))
}

/// Evaluates the trained model: reconstruction error, distance of generated
/// samples to the train split, mode coverage when centers are known, and
/// image diversity when the data is images. Deterministic for a fixed
/// configuration, so re-running reproduces `metrics.json` byte for byte.
pub fn stage_eval(cfg: &ExperimentConfig) -> Result<EvalMetrics> {
    ensure_out(cfg)?;
    let ae = load_ae(cfg)?;
    let dict = load_dict(cfg)?;
    let model = load_gan(cfg)?;
    let (train, heldout) = build_dataset(cfg)?;

    let seed = cfg.seed.wrapping_add(SEED_EVAL);
    let n = cfg.eval.n_samples;
    let generated = draw_samples(cfg, &model, &dict, n, seed)?;

    let nn = estimate_nn_distance(
        &generated,
        &train.samples,
        Phi::Identity,
        &DiscClass::Mlp { hidden: cfg.eval.disc_hidden },
        seed.wrapping_add(1),
    )?;

    let coverage = match normalized_centers(cfg, &train) {
        Some((centers, radius)) => Some(mode_coverage(&generated, &centers, radius)?),
        None => None,
    };

    let diversity = if is_image_data(cfg) {
        let side = image_side(cfg);
        let imgs: Vec<Tensor> = (0..generated.rows())
            .map(|i| {
                Tensor::from_parts_unchecked(vec![side, side], generated.row(i).to_vec())
            })
            .collect();
        Some(diversity_msssim(&imgs, cfg.eval.msssim_pairs, 2.0, seed.wrapping_add(2))?)
    } else {
        None
    };

    let metrics = EvalMetrics {
        n_generated: n,
        seed: cfg.seed,
        reconstruction_mse_train: reconstruction_mse(&ae, &train)?,
        reconstruction_mse_heldout: reconstruction_mse(&ae, &heldout)?,
        nn_distance_generated_vs_train: nn.value,
        coverage,
        diversity_msssim: diversity,
    };
    save_json(&metrics, &out_path(cfg, METRICS_FILE))?;
    Ok(metrics)
}

/// Measures the train/heldout distance gap of the trained generator against
/// the bound assembled from the Rademacher estimate and the coding quality.
pub fn stage_gap(cfg: &ExperimentConfig) -> Result<GapReport> {
    ensure_out(cfg)?;
    if cfg.sampler.prior == PriorChoice::GaussianD {
        return Err(LccError::Config(
            "gap analysis needs the coding prior, not the gaussian baseline".into(),
        ));
    }
    let ae = load_ae(cfg)?;
    let dict = load_dict(cfg)?;
    let model = load_gan(cfg)?;
    let (train, heldout) = build_dataset(cfg)?;
    let latents = embed(&ae, &train)?;

    let mut gc = GapConfig::new(cfg.sampler.d, cfg.seed.wrapping_add(SEED_GAP));
    gc.n_generated = cfg.eval.n_samples;
    gc.disc_hidden = cfg.eval.disc_hidden;
    gc.confidence = cfg.eval.confidence;
    gc.rademacher_draws = cfg.eval.rademacher_draws;
    let report = gap_harness(&model, &dict, &latents, &train.samples, &heldout.samples, &gc)?;
    save_json(&report, &out_path(cfg, GAP_JSON_FILE))?;
    write_csv(
        &out_path(cfg, GAP_CSV_FILE),
        GAP_CSV_HEADER,
        &[gap_report_csv(&report)],
    )?;
    Ok(report)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Writes the artifact manifest: one `sha256  filename` line per artifact
/// present in the output directory, in a fixed order. A failed stage is
/// recorded on the first line.
pub fn write_manifest(cfg: &ExperimentConfig, failed_stage: Option<&str>) -> Result<()> {
    ensure_out(cfg)?;
    let mut text = String::new();
    match failed_stage {
        Some(stage) => {
            let _ = writeln!(text, "status: failed at {stage}");
        }
        None => {
            let _ = writeln!(text, "status: ok");
        }
    }
    for name in ARTIFACTS {
        let path = out_path(cfg, name);
        if path.exists() {
            let _ = writeln!(text, "{}  {name}", sha256_hex(&fs::read(&path)?));
        }
    }
    fs::write(out_path(cfg, MANIFEST_FILE), text)?;
    Ok(())
}

/// Runs the four stages in order, persisting the configuration first and the
/// manifest after every stage. A failing stage leaves the artifacts produced
/// so far in place, with the manifest naming the failed stage.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    ensure_out(cfg)?;
    fs::write(out_path(cfg, CONFIG_FILE), cfg.serialize())?;
    let stages: [(&str, fn(&ExperimentConfig) -> Result<()>); 4] = [
        ("train-ae", stage_train_ae),
        ("learn-lcc", stage_learn_lcc),
        ("train-gan", stage_train_gan),
        ("eval", |c| stage_eval(c).map(|_| ())),
    ];
    for (name, stage) in stages {
        if let Err(e) = stage(cfg) {
            write_manifest(cfg, Some(name))?;
            return Err(e);
        }
        write_manifest(cfg, None)?;
    }
    Ok(())
}
