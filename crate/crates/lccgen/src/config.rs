//! Experiment configuration: a flat `key = value` text format with dotted
//! section prefixes, chosen so experiment grids live in small diffable files.
//! Every field has a default, so an empty file is a runnable configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::ManifoldSpec;
use crate::error::{LccError, Result};
use crate::gan::Phi;
use crate::sampler::PriorMode;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetKind {
    Ring,
    SwissRoll,
    TwoCircles,
    Digits,
    /// External image archives in the classic big-endian binary layout.
    Idx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub n: usize,
    pub modes: usize,
    pub radius: f64,
    pub sigma: f64,
    pub noise: f64,
    /// Pooled square side for image data.
    pub side: usize,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub train_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Ring,
            n: 2000,
            modes: 8,
            radius: 2.0,
            sigma: 0.05,
            noise: 0.0,
            side: 8,
            images: None,
            labels: None,
            train_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub hidden_width: usize,
    pub learning_rate: f64,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self { latent_dim: 2, epochs: 50, hidden_width: 64, learning_rate: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LccSection {
    pub anchors: usize,
    pub l_h: f64,
    pub l_g: f64,
    pub outer_iters: usize,
}

impl Default for LccSection {
    fn default() -> Self {
        Self { anchors: 16, l_h: 1.0, l_g: 1.0, outer_iters: 10 }
    }
}

/// How generator inputs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorChoice {
    StandardGaussian,
    NormalizedGaussian,
    /// Baseline: plain Gaussian noise of dimension `sampler.d` through a
    /// trainable linear adapter, bypassing the coding step.
    GaussianD,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSection {
    pub d: usize,
    pub prior: PriorChoice,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self { d: 2, prior: PriorChoice::StandardGaussian }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanSection {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_width: usize,
    pub phi: Phi,
}

impl Default for GanSection {
    fn default() -> Self {
        Self {
            iterations: 2000,
            batch_size: 64,
            learning_rate: 2e-4,
            hidden_width: 128,
            phi: Phi::Log,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSection {
    pub n_samples: usize,
    pub msssim_pairs: usize,
    pub confidence: f64,
    pub rademacher_draws: usize,
    pub disc_hidden: usize,
    pub safety: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            n_samples: 500,
            msssim_pairs: 200,
            confidence: 0.05,
            rademacher_draws: 10,
            disc_hidden: 16,
            safety: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub ae: AeConfig,
    pub lcc: LccSection,
    pub sampler: SamplerSection,
    pub gan: GanSection,
    pub eval: EvalSection,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            ae: AeConfig::default(),
            lcc: LccSection::default(),
            sampler: SamplerSection::default(),
            gan: GanSection::default(),
            eval: EvalSection::default(),
            seed: 0,
            out: PathBuf::from("runs/default"),
        }
    }
}

impl ExperimentConfig {
    /// Rejects configurations no stage could run: sampling dimension above
    /// the anchor count, missing referenced files, empty budgets.
    pub fn validate(&self) -> Result<()> {
        if self.sampler.d > self.lcc.anchors {
            return Err(LccError::Config(format!(
                "sampler.d = {} exceeds lcc.anchors = {}",
                self.sampler.d, self.lcc.anchors
            )));
        }
        if self.sampler.d == 0 || self.lcc.anchors < 2 {
            return Err(LccError::Config("need d >= 1 and at least 2 anchors".into()));
        }
        if self.ae.latent_dim == 0 {
            return Err(LccError::Config("ae.latent_dim must be positive".into()));
        }
        if self.dataset.n < self.lcc.anchors {
            return Err(LccError::Config(format!(
                "dataset.n = {} below lcc.anchors = {}",
                self.dataset.n, self.lcc.anchors
            )));
        }
        if !(0.0 < self.dataset.train_fraction && self.dataset.train_fraction < 1.0) {
            return Err(LccError::Config("train_fraction must be in (0, 1)".into()));
        }
        if self.dataset.kind == DatasetKind::Idx {
            for (label, path) in [("dataset.images", &self.dataset.images), ("dataset.labels", &self.dataset.labels)] {
                match path {
                    None => {
                        return Err(LccError::Config(format!("{label} required for idx data")))
                    }
                    Some(p) if !p.exists() => {
                        return Err(LccError::Config(format!(
                            "{label} does not exist: {}",
                            p.display()
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// The manifold spec of a synthetic dataset section, seeded from the
    /// experiment seed.
    pub fn manifold_spec(&self) -> Option<ManifoldSpec> {
        let d = &self.dataset;
        match d.kind {
            DatasetKind::Ring => Some(ManifoldSpec::ring(d.modes, d.radius, d.sigma, self.seed)),
            DatasetKind::SwissRoll => Some(ManifoldSpec::swiss_roll(d.noise, self.seed)),
            DatasetKind::TwoCircles => Some(ManifoldSpec::two_circles(d.noise, self.seed)),
            DatasetKind::Digits | DatasetKind::Idx => None,
        }
    }

    pub fn prior_mode(&self) -> PriorMode {
        match self.sampler.prior {
            PriorChoice::NormalizedGaussian => PriorMode::NormalizedGaussian,
            _ => PriorMode::StandardGaussian,
        }
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let d = &self.dataset;
        let _ = writeln!(s, "dataset.kind = {}", kind_str(&d.kind));
        let _ = writeln!(s, "dataset.n = {}", d.n);
        let _ = writeln!(s, "dataset.modes = {}", d.modes);
        let _ = writeln!(s, "dataset.radius = {}", d.radius);
        let _ = writeln!(s, "dataset.sigma = {}", d.sigma);
        let _ = writeln!(s, "dataset.noise = {}", d.noise);
        let _ = writeln!(s, "dataset.side = {}", d.side);
        if let Some(p) = &d.images {
            let _ = writeln!(s, "dataset.images = {}", p.display());
        }
        if let Some(p) = &d.labels {
            let _ = writeln!(s, "dataset.labels = {}", p.display());
        }
        let _ = writeln!(s, "dataset.train_fraction = {}", d.train_fraction);
        let _ = writeln!(s, "ae.latent_dim = {}", self.ae.latent_dim);
        let _ = writeln!(s, "ae.epochs = {}", self.ae.epochs);
        let _ = writeln!(s, "ae.hidden_width = {}", self.ae.hidden_width);
        let _ = writeln!(s, "ae.learning_rate = {}", self.ae.learning_rate);
        let _ = writeln!(s, "lcc.anchors = {}", self.lcc.anchors);
        let _ = writeln!(s, "lcc.l_h = {}", self.lcc.l_h);
        let _ = writeln!(s, "lcc.l_g = {}", self.lcc.l_g);
        let _ = writeln!(s, "lcc.outer_iters = {}", self.lcc.outer_iters);
        let _ = writeln!(s, "sampler.d = {}", self.sampler.d);
        let _ = writeln!(s, "sampler.prior = {}", prior_str(self.sampler.prior));
        let _ = writeln!(s, "gan.iterations = {}", self.gan.iterations);
        let _ = writeln!(s, "gan.batch_size = {}", self.gan.batch_size);
        let _ = writeln!(s, "gan.learning_rate = {}", self.gan.learning_rate);
        let _ = writeln!(s, "gan.hidden_width = {}", self.gan.hidden_width);
        let _ = writeln!(s, "gan.phi = {}", phi_str(self.gan.phi));
        let _ = writeln!(s, "eval.n_samples = {}", self.eval.n_samples);
        let _ = writeln!(s, "eval.msssim_pairs = {}", self.eval.msssim_pairs);
        let _ = writeln!(s, "eval.confidence = {}", self.eval.confidence);
        let _ = writeln!(s, "eval.rademacher_draws = {}", self.eval.rademacher_draws);
        let _ = writeln!(s, "eval.disc_hidden = {}", self.eval.disc_hidden);
        let _ = writeln!(s, "eval.safety = {}", self.eval.safety);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }

    /// Parses the flat format. Unknown keys are rejected so typos do not
    /// silently fall back to defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                LccError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value).map_err(|e| {
                LccError::Config(format!("line {}: {e}", lineno + 1))
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(LccError::Config(format!(
                "config file not found: {}",
                path.display()
            )));
        }
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| LccError::Config(format!("bad value for {key}: {v}")))
        }
        match key {
            "dataset.kind" => {
                self.dataset.kind = match value {
                    "ring" => DatasetKind::Ring,
                    "swiss_roll" => DatasetKind::SwissRoll,
                    "two_circles" => DatasetKind::TwoCircles,
                    "digits" => DatasetKind::Digits,
                    "idx" => DatasetKind::Idx,
                    other => {
                        return Err(LccError::Config(format!("unknown dataset kind {other}")))
                    }
                }
            }
            "dataset.n" => self.dataset.n = num(key, value)?,
            "dataset.modes" => self.dataset.modes = num(key, value)?,
            "dataset.radius" => self.dataset.radius = num(key, value)?,
            "dataset.sigma" => self.dataset.sigma = num(key, value)?,
            "dataset.noise" => self.dataset.noise = num(key, value)?,
            "dataset.side" => self.dataset.side = num(key, value)?,
            "dataset.images" => self.dataset.images = Some(PathBuf::from(value)),
            "dataset.labels" => self.dataset.labels = Some(PathBuf::from(value)),
            "dataset.train_fraction" => self.dataset.train_fraction = num(key, value)?,
            "ae.latent_dim" => self.ae.latent_dim = num(key, value)?,
            "ae.epochs" => self.ae.epochs = num(key, value)?,
            "ae.hidden_width" => self.ae.hidden_width = num(key, value)?,
            "ae.learning_rate" => self.ae.learning_rate = num(key, value)?,
            "lcc.anchors" => self.lcc.anchors = num(key, value)?,
            "lcc.l_h" => self.lcc.l_h = num(key, value)?,
            "lcc.l_g" => self.lcc.l_g = num(key, value)?,
            "lcc.outer_iters" => self.lcc.outer_iters = num(key, value)?,
            "sampler.d" => self.sampler.d = num(key, value)?,
            "sampler.prior" => {
                self.sampler.prior = match value {
                    "standard_gaussian" => PriorChoice::StandardGaussian,
                    "normalized_gaussian" => PriorChoice::NormalizedGaussian,
                    "gaussian_d" => PriorChoice::GaussianD,
                    other => return Err(LccError::Config(format!("unknown prior {other}"))),
                }
            }
            "gan.iterations" => self.gan.iterations = num(key, value)?,
            "gan.batch_size" => self.gan.batch_size = num(key, value)?,
            "gan.learning_rate" => self.gan.learning_rate = num(key, value)?,
            "gan.hidden_width" => self.gan.hidden_width = num(key, value)?,
            "gan.phi" => {
                self.gan.phi = match value {
                    "log" => Phi::Log,
                    "identity" => Phi::Identity,
                    other => return Err(LccError::Config(format!("unknown phi {other}"))),
                }
            }
            "eval.n_samples" => self.eval.n_samples = num(key, value)?,
            "eval.msssim_pairs" => self.eval.msssim_pairs = num(key, value)?,
            "eval.confidence" => self.eval.confidence = num(key, value)?,
            "eval.rademacher_draws" => self.eval.rademacher_draws = num(key, value)?,
            "eval.disc_hidden" => self.eval.disc_hidden = num(key, value)?,
            "eval.safety" => self.eval.safety = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(LccError::Config(format!("unknown key {other}"))),
        }
        Ok(())
    }
}

fn kind_str(k: &DatasetKind) -> &'static str {
    match k {
        DatasetKind::Ring => "ring",
        DatasetKind::SwissRoll => "swiss_roll",
        DatasetKind::TwoCircles => "two_circles",
        DatasetKind::Digits => "digits",
        DatasetKind::Idx => "idx",
    }
}

fn prior_str(p: PriorChoice) -> &'static str {
    match p {
        PriorChoice::StandardGaussian => "standard_gaussian",
        PriorChoice::NormalizedGaussian => "normalized_gaussian",
        PriorChoice::GaussianD => "gaussian_d",
    }
}

fn phi_str(p: Phi) -> &'static str {
    match p {
        Phi::Log => "log",
        Phi::Identity => "identity",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ManifoldKind;

    #[test]
    fn empty_text_is_the_default_config() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trips_through_text() {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.kind = DatasetKind::SwissRoll;
        cfg.dataset.n = 777;
        cfg.ae.latent_dim = 3;
        cfg.lcc.anchors = 24;
        cfg.sampler.d = 5;
        cfg.sampler.prior = PriorChoice::NormalizedGaussian;
        cfg.gan.phi = Phi::Identity;
        cfg.seed = 42;
        cfg.out = PathBuf::from("runs/exp1");
        let text = cfg.serialize();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = ExperimentConfig::parse(
            "# experiment grid point\n\nseed = 7  # inline note\nlcc.anchors = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.lcc.anchors, 4);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ExperimentConfig::parse("lcc.anchor_count = 4\n").unwrap_err();
        assert!(matches!(err, LccError::Config(_)));
    }

    #[test]
    fn d_above_m_rejected_by_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.sampler.d = 17;
        cfg.lcc.anchors = 16;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn idx_dataset_requires_existing_files() {
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.kind = DatasetKind::Idx;
        assert!(cfg.validate().is_err());
        cfg.dataset.images = Some(PathBuf::from("/nonexistent/images"));
        cfg.dataset.labels = Some(PathBuf::from("/nonexistent/labels"));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_values_name_their_line() {
        let err = ExperimentConfig::parse("seed = 1\nlcc.anchors = sixteen\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn manifold_spec_tracks_kind_and_seed() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = 9;
        let spec = cfg.manifold_spec().unwrap();
        assert_eq!(spec.seed, 9);
        assert!(matches!(spec.kind, ManifoldKind::RingOfGaussians { .. }));
        cfg.dataset.kind = DatasetKind::Digits;
        assert!(cfg.manifold_spec().is_none());
    }
}
