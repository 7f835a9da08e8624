//! Synthetic manifold datasets, IDX ingestion and normalization.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::tensor::Tensor;

/// Per-feature shift/scale applied when mapping features into `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Tensor,
    pub labels: Option<Vec<u8>>,
    pub name: String,
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(samples: Tensor, name: impl Into<String>) -> Self {
        Self {
            samples,
            labels: None,
            name: name.into(),
            normalization: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    /// Maps every feature into `[-1, 1]` by min/max, recording the transform.
    /// Already-normalized datasets pass through unchanged, so normalizing
    /// twice equals normalizing once.
    pub fn normalize(mut self) -> Self {
        if self.normalization.is_some() {
            return self;
        }
        let (n, d) = (self.len(), self.dim());
        let mut shift = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..n {
                let v = self.samples.at(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            shift[j] = (lo + hi) / 2.0;
            scale[j] = if hi > lo { (hi - lo) / 2.0 } else { 1.0 };
        }
        for i in 0..n {
            for j in 0..d {
                let v = (self.samples.at(i, j) - shift[j]) / scale[j];
                self.samples.data_mut()[i * d + j] = v;
            }
        }
        self.normalization = Some(Normalization { shift, scale });
        self
    }

    /// One sample per row, comma-separated.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path)?;
        for i in 0..self.len() {
            let row: Vec<String> = self.samples.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    RingOfGaussians { modes: usize, radius: f64, sigma: f64 },
    SwissRoll { noise: f64 },
    TwoCircles { noise: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub seed: u64,
}

impl ManifoldSpec {
    pub fn ring(modes: usize, radius: f64, sigma: f64, seed: u64) -> Self {
        Self {
            kind: ManifoldKind::RingOfGaussians { modes, radius, sigma },
            ambient_dim: 2,
            intrinsic_dim: 1,
            seed,
        }
    }

    pub fn swiss_roll(noise: f64, seed: u64) -> Self {
        Self {
            kind: ManifoldKind::SwissRoll { noise },
            ambient_dim: 3,
            intrinsic_dim: 2,
            seed,
        }
    }

    pub fn two_circles(noise: f64, seed: u64) -> Self {
        Self {
            kind: ManifoldKind::TwoCircles { noise },
            ambient_dim: 2,
            intrinsic_dim: 1,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.intrinsic_dim > self.ambient_dim {
            return Err(LccError::Config(format!(
                "intrinsic dim {} exceeds ambient dim {}",
                self.intrinsic_dim, self.ambient_dim
            )));
        }
        let need = match self.kind {
            ManifoldKind::RingOfGaussians { .. } | ManifoldKind::TwoCircles { .. } => 2,
            ManifoldKind::SwissRoll { .. } => 3,
        };
        if self.ambient_dim != need {
            return Err(LccError::Config(format!(
                "{:?} requires ambient dim {}, got {}",
                self.kind, need, self.ambient_dim
            )));
        }
        match self.kind {
            ManifoldKind::RingOfGaussians { modes, .. } if modes == 0 => {
                Err(LccError::Config("ring needs at least one mode".into()))
            }
            _ => Ok(()),
        }
    }

    /// The mode centers for the ring kind; used by mode-coverage evaluation.
    pub fn mode_centers(&self) -> Option<Vec<Vec<f64>>> {
        match self.kind {
            ManifoldKind::RingOfGaussians { modes, radius, .. } => Some(
                (0..modes)
                    .map(|k| {
                        let theta = 2.0 * std::f64::consts::PI * k as f64 / modes as f64;
                        vec![radius * theta.cos(), radius * theta.sin()]
                    })
                    .collect(),
            ),
            _ => None,
        }
    }
}

/// Draws `n` points on the specified manifold plus noise; a pure function of
/// `(spec, n)`.
pub fn generate(spec: &ManifoldSpec, n: usize) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(LccError::Config("need at least one sample".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut data = Vec::with_capacity(n * spec.ambient_dim);
    let name;
    match spec.kind {
        ManifoldKind::RingOfGaussians { modes, radius, sigma } => {
            name = format!("ring_of_gaussians_{modes}");
            for _ in 0..n {
                let k = rng.gen_range(0..modes);
                let theta = 2.0 * std::f64::consts::PI * k as f64 / modes as f64;
                data.push(radius * theta.cos() + sigma * std_normal.sample(&mut rng));
                data.push(radius * theta.sin() + sigma * std_normal.sample(&mut rng));
            }
        }
        ManifoldKind::SwissRoll { noise } => {
            name = "swiss_roll".to_string();
            for _ in 0..n {
                let t = 1.5 * std::f64::consts::PI * (1.0 + 2.0 * rng.gen::<f64>());
                let y = 10.0 * rng.gen::<f64>();
                data.push(t * t.cos() + noise * std_normal.sample(&mut rng));
                data.push(y + noise * std_normal.sample(&mut rng));
                data.push(t * t.sin() + noise * std_normal.sample(&mut rng));
            }
        }
        ManifoldKind::TwoCircles { noise } => {
            name = "two_circles".to_string();
            for _ in 0..n {
                let r = if rng.gen::<bool>() { 1.0 } else { 2.0 };
                let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                data.push(r * theta.cos() + noise * std_normal.sample(&mut rng));
                data.push(r * theta.sin() + noise * std_normal.sample(&mut rng));
            }
        }
    }
    Ok(Dataset::new(
        Tensor::matrix(n, spec.ambient_dim, data)?,
        name,
    ))
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| LccError::Format("truncated IDX header".into()))
}

/// Loads IDX image/label files, mean-pools each image to `side x side`,
/// scales pixels from `[0, 255]` to `[-1, 1]` and flattens row-major.
pub fn load_idx(images_path: &Path, labels_path: &Path, side: usize) -> Result<Dataset> {
    let img_bytes = fs::read(images_path)?;
    let lab_bytes = fs::read(labels_path)?;
    if read_be_u32(&img_bytes, 0)? != IDX_IMAGES_MAGIC {
        return Err(LccError::Format("bad IDX images magic".into()));
    }
    if read_be_u32(&lab_bytes, 0)? != IDX_LABELS_MAGIC {
        return Err(LccError::Format("bad IDX labels magic".into()));
    }
    let n = read_be_u32(&img_bytes, 4)? as usize;
    let rows = read_be_u32(&img_bytes, 8)? as usize;
    let cols = read_be_u32(&img_bytes, 12)? as usize;
    let n_labels = read_be_u32(&lab_bytes, 4)? as usize;
    if n != n_labels {
        return Err(LccError::Format(format!(
            "{n} images but {n_labels} labels"
        )));
    }
    if side == 0 || side > rows || side > cols {
        return Err(LccError::Config(format!(
            "downsample side {side} invalid for {rows}x{cols} images"
        )));
    }
    let payload = &img_bytes[16..];
    if payload.len() < n * rows * cols {
        return Err(LccError::Io(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            "truncated IDX image payload",
        )));
    }
    let labels = lab_bytes
        .get(8..8 + n)
        .ok_or_else(|| {
            LccError::Io(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "truncated IDX label payload",
            ))
        })?
        .to_vec();

    let mut data = Vec::with_capacity(n * side * side);
    let mut sums = vec![0.0f64; side * side];
    let mut counts = vec![0usize; side * side];
    for i in 0..n {
        sums.iter_mut().for_each(|v| *v = 0.0);
        counts.iter_mut().for_each(|v| *v = 0);
        let img = &payload[i * rows * cols..(i + 1) * rows * cols];
        for r in 0..rows {
            let br = r * side / rows;
            for c in 0..cols {
                let bc = c * side / cols;
                sums[br * side + bc] += img[r * cols + c] as f64;
                counts[br * side + bc] += 1;
            }
        }
        for k in 0..side * side {
            let mean = sums[k] / counts[k] as f64;
            data.push(mean / 255.0 * 2.0 - 1.0);
        }
    }
    let mut ds = Dataset::new(Tensor::matrix(n, side * side, data)?, "idx");
    ds.labels = Some(labels);
    ds.normalization = Some(Normalization {
        shift: vec![127.5; side * side],
        scale: vec![127.5; side * side],
    });
    Ok(ds)
}

/// Writes IDX image/label files (big-endian headers, raw u8 payload).
pub fn write_idx(
    images_path: &Path,
    labels_path: &Path,
    images: &[Vec<u8>],
    labels: &[u8],
    rows: usize,
    cols: usize,
) -> Result<()> {
    if images.len() != labels.len() {
        return Err(LccError::Config("image/label count mismatch".into()));
    }
    let mut img = Vec::new();
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    for im in images {
        img.extend_from_slice(im);
    }
    fs::write(images_path, img)?;
    let mut lab = Vec::new();
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lab.extend_from_slice(labels);
    fs::write(labels_path, lab)?;
    Ok(())
}

/// Disjoint train/heldout partition with a deterministic shuffle.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(LccError::Config(format!(
            "train fraction {train_fraction} out of (0, 1)"
        )));
    }
    let n = ds.len();
    let n_train = ((n as f64) * train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(LccError::Config(format!(
            "fraction {train_fraction} leaves an empty side for {n} samples"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    let take = |ids: &[usize], tag: &str| -> Dataset {
        let d = ds.dim();
        let mut data = Vec::with_capacity(ids.len() * d);
        let mut labels = ds.labels.as_ref().map(|_| Vec::with_capacity(ids.len()));
        for &i in ids {
            data.extend_from_slice(ds.samples.row(i));
            if let (Some(out), Some(src)) = (labels.as_mut(), ds.labels.as_ref()) {
                out.push(src[i]);
            }
        }
        Dataset {
            samples: Tensor::from_parts_unchecked(vec![ids.len(), d], data),
            labels,
            name: format!("{}_{}", ds.name, tag),
            normalization: ds.normalization.clone(),
        }
    };
    Ok((take(&idx[..n_train], "train"), take(&idx[n_train..], "heldout")))
}

/// Hand-drawn 8x8 digit glyphs with pixel shifts and intensity jitter; a
/// stand-in digit dataset when no IDX files are on disk.
pub fn synthetic_digits(n: usize, seed: u64) -> Result<Dataset> {
    const GLYPHS: [[u8; 8]; 10] = [
        [0x3c, 0x66, 0x66, 0x66, 0x66, 0x66, 0x66, 0x3c], // 0
        [0x18, 0x38, 0x18, 0x18, 0x18, 0x18, 0x18, 0x7e], // 1
        [0x3c, 0x66, 0x06, 0x0c, 0x18, 0x30, 0x60, 0x7e], // 2
        [0x3c, 0x66, 0x06, 0x1c, 0x06, 0x06, 0x66, 0x3c], // 3
        [0x0c, 0x1c, 0x2c, 0x4c, 0x7e, 0x0c, 0x0c, 0x0c], // 4
        [0x7e, 0x60, 0x60, 0x7c, 0x06, 0x06, 0x66, 0x3c], // 5
        [0x3c, 0x66, 0x60, 0x7c, 0x66, 0x66, 0x66, 0x3c], // 6
        [0x7e, 0x06, 0x0c, 0x0c, 0x18, 0x18, 0x30, 0x30], // 7
        [0x3c, 0x66, 0x66, 0x3c, 0x66, 0x66, 0x66, 0x3c], // 8
        [0x3c, 0x66, 0x66, 0x66, 0x3e, 0x06, 0x66, 0x3c], // 9
    ];
    if n == 0 {
        return Err(LccError::Config("need at least one sample".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * 64);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let digit = rng.gen_range(0..10usize);
        labels.push(digit as u8);
        let dr: i32 = rng.gen_range(-1..=1);
        let dc: i32 = rng.gen_range(-1..=1);
        let on = 0.7 + 0.3 * rng.gen::<f64>();
        for r in 0..8i32 {
            for c in 0..8i32 {
                let (sr, sc) = (r - dr, c - dc);
                let lit = (0..8).contains(&sr)
                    && (0..8).contains(&sc)
                    && (GLYPHS[digit][sr as usize] >> (7 - sc)) & 1 == 1;
                let noise = 0.05 * rng.gen::<f64>();
                let v = if lit { on - noise } else { noise };
                data.push(v * 2.0 - 1.0);
            }
        }
    }
    let mut ds = Dataset::new(Tensor::matrix(n, 64, data)?, "synthetic_digits");
    ds.labels = Some(labels);
    ds.normalization = Some(Normalization {
        shift: vec![0.5; 64],
        scale: vec![0.5; 64],
    });
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::dist2;

    #[test]
    fn noiseless_ring_hits_mode_centers_exactly() {
        let spec = ManifoldSpec::ring(8, 2.0, 0.0, 5);
        let ds = generate(&spec, 500).unwrap();
        let centers = spec.mode_centers().unwrap();
        for i in 0..ds.len() {
            let p = ds.samples.row(i);
            let origin_dist = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((origin_dist - 2.0).abs() < 1e-12);
            let nearest = centers
                .iter()
                .map(|c| dist2(p, c))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-12);
        }
    }

    #[test]
    fn noiseless_swiss_roll_satisfies_parametrization() {
        let ds = generate(&ManifoldSpec::swiss_roll(0.0, 6), 300).unwrap();
        for i in 0..ds.len() {
            let p = ds.samples.row(i);
            let t = (p[0] * p[0] + p[2] * p[2]).sqrt();
            let residual = ((p[0] - t * t.cos()).powi(2) + (p[2] - t * t.sin()).powi(2)).sqrt();
            assert!(residual < 1e-9, "residual {residual}");
        }
    }

    #[test]
    fn ring_mode_counts_follow_multinomial_concentration() {
        let spec = ManifoldSpec::ring(8, 2.0, 0.05, 7);
        let n = 10_000;
        let ds = generate(&spec, n).unwrap();
        let centers = spec.mode_centers().unwrap();
        let mut counts = vec![0usize; 8];
        for i in 0..ds.len() {
            let p = ds.samples.row(i);
            let (k, _) = centers
                .iter()
                .enumerate()
                .map(|(k, c)| (k, dist2(p, c)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            counts[k] += 1;
        }
        let expect = n as f64 / 8.0;
        let sigma = (n as f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - expect).abs() <= 3.0 * sigma,
                "count {c} vs expected {expect} +- {}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn generate_is_pure() {
        let spec = ManifoldSpec::swiss_roll(0.1, 9);
        let a = generate(&spec, 100).unwrap();
        let b = generate(&spec, 100).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn normalize_is_idempotent_and_bounded() {
        let ds = generate(&ManifoldSpec::swiss_roll(0.1, 4), 200).unwrap();
        let once = ds.normalize();
        assert!(once
            .samples
            .data()
            .iter()
            .all(|&v| (-1.0..=1.0).contains(&v)));
        let twice = once.clone().normalize();
        assert_eq!(once.samples, twice.samples);
    }

    #[test]
    fn split_partitions_and_is_deterministic() {
        let ds = generate(&ManifoldSpec::ring(4, 1.0, 0.1, 2), 10).unwrap();
        let (tr, ho) = split(&ds, 0.8, 11).unwrap();
        assert_eq!((tr.len(), ho.len()), (8, 2));
        let (tr2, ho2) = split(&ds, 0.8, 11).unwrap();
        assert_eq!(tr.samples, tr2.samples);
        assert_eq!(ho.samples, ho2.samples);

        // union equals original multiset
        let mut all: Vec<Vec<u64>> = Vec::new();
        for i in 0..tr.len() {
            all.push(tr.samples.row(i).iter().map(|v| v.to_bits()).collect());
        }
        for i in 0..ho.len() {
            all.push(ho.samples.row(i).iter().map(|v| v.to_bits()).collect());
        }
        let mut orig: Vec<Vec<u64>> = (0..ds.len())
            .map(|i| ds.samples.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        all.sort();
        orig.sort();
        assert_eq!(all, orig);
    }

    #[test]
    fn different_seeds_usually_differ() {
        let ds = generate(&ManifoldSpec::ring(4, 1.0, 0.1, 2), 20).unwrap();
        let mut distinct = 0;
        for s in 0..100u64 {
            let (a, _) = split(&ds, 0.5, 2 * s).unwrap();
            let (b, _) = split(&ds, 0.5, 2 * s + 1).unwrap();
            if a.samples != b.samples {
                distinct += 1;
            }
        }
        assert!(distinct >= 95, "only {distinct}/100 seed pairs differed");
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = generate(&ManifoldSpec::ring(4, 1.0, 0.1, 2), 10).unwrap();
        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn idx_round_trip_with_constant_images() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = dir.path().join("images.idx");
        let labs = dir.path().join("labels.idx");
        let zero = vec![0u8; 28 * 28];
        let full = vec![255u8; 28 * 28];
        write_idx(&imgs, &labs, &[zero, full], &[0, 1], 28, 28).unwrap();
        let ds = load_idx(&imgs, &labs, 8).unwrap();
        assert_eq!(ds.dim(), 64);
        assert!(ds.samples.row(0).iter().all(|&v| v == -1.0));
        assert!(ds.samples.row(1).iter().all(|&v| v == 1.0));
        assert_eq!(ds.labels.as_deref(), Some(&[0u8, 1][..]));
    }

    #[test]
    fn idx_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = dir.path().join("images.idx");
        let labs = dir.path().join("labels.idx");
        write_idx(&imgs, &labs, &[vec![0u8; 4]], &[0], 2, 2).unwrap();
        let mut bytes = fs::read(&imgs).unwrap();
        bytes[3] = 0x99;
        fs::write(&imgs, bytes).unwrap();
        assert!(matches!(
            load_idx(&imgs, &labs, 2),
            Err(LccError::Format(_))
        ));
    }

    #[test]
    fn idx_rejects_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let imgs = dir.path().join("images.idx");
        let labs = dir.path().join("labels.idx");
        write_idx(&imgs, &labs, &[vec![7u8; 16]], &[3], 4, 4).unwrap();
        let bytes = fs::read(&imgs).unwrap();
        fs::write(&imgs, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(load_idx(&imgs, &labs, 4), Err(LccError::Io(_))));
    }

    #[test]
    fn synthetic_digits_in_range_with_labels() {
        let ds = synthetic_digits(200, 13).unwrap();
        assert_eq!(ds.dim(), 64);
        assert!(ds.samples.data().iter().all(|&v| (-1.0..=1.0).contains(&v)));
        let labels = ds.labels.unwrap();
        assert!(labels.iter().all(|&l| l < 10));
        // all ten digits appear in 200 draws
        let mut seen = [false; 10];
        for &l in &labels {
            seen[l as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
