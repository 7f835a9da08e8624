//! Multi-scale structural similarity for square grayscale images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::tensor::Tensor;

/// Standard 5-scale weight vector; renormalized to the scales actually used.
const SCALE_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsSsim {
    pub score: f64,
    pub scales_used: usize,
    /// True when the image was smaller than the standard window and a
    /// reduced-window single-scale comparison was used instead.
    pub fallback: bool,
}

fn gaussian_window(size: usize) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut w = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
            w.push((-d2 / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp());
        }
    }
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    w
}

/// Mean luminance*contrast and mean contrast terms over all valid window
/// positions; negative contrast terms are clamped to 0.
fn ssim_pass(a: &Tensor, b: &Tensor, window: usize, dynamic_range: f64) -> (f64, f64) {
    let side = a.rows();
    let w = gaussian_window(window);
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    let out = side - window + 1;
    let mut lum_cs_sum = 0.0;
    let mut cs_sum = 0.0;
    for oy in 0..out {
        for ox in 0..out {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            let mut ab = 0.0;
            for ky in 0..window {
                for kx in 0..window {
                    let wv = w[ky * window + kx];
                    let av = a.at(oy + ky, ox + kx);
                    let bv = b.at(oy + ky, ox + kx);
                    mu_a += wv * av;
                    mu_b += wv * bv;
                    aa += wv * av * av;
                    bb += wv * bv * bv;
                    ab += wv * av * bv;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
            let cs = ((2.0 * cov + c2) / (var_a + var_b + c2)).max(0.0);
            lum_cs_sum += lum * cs;
            cs_sum += cs;
        }
    }
    let n = (out * out) as f64;
    (lum_cs_sum / n, cs_sum / n)
}

/// 2x2 mean pooling; odd trailing row/column dropped.
fn downsample(img: &Tensor) -> Tensor {
    let side = img.rows() / 2;
    let mut data = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            data.push(
                0.25 * (img.at(2 * y, 2 * x)
                    + img.at(2 * y, 2 * x + 1)
                    + img.at(2 * y + 1, 2 * x)
                    + img.at(2 * y + 1, 2 * x + 1)),
            );
        }
    }
    Tensor::from_parts_unchecked(vec![side, side], data)
}

/// Multi-scale structural similarity of two equal-size square images.
/// `dynamic_range` is the nominal value span of the pixel encoding (2.0 for
/// data in `[-1, 1]`).
pub fn ms_ssim(a: &Tensor, b: &Tensor, dynamic_range: f64) -> Result<MsSsim> {
    if a.shape() != b.shape() {
        return Err(LccError::Dimension(format!(
            "image shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.shape().len() != 2 || a.rows() != a.cols() {
        return Err(LccError::Dimension(format!(
            "images must be square matrices, got {:?}",
            a.shape()
        )));
    }
    if dynamic_range <= 0.0 {
        return Err(LccError::Config("dynamic range must be positive".into()));
    }
    let side = a.rows();

    if side < WINDOW {
        // reduced-window single-scale comparison
        let window = if side % 2 == 0 { side - 1 } else { side };
        if window == 0 {
            return Err(LccError::Dimension("empty image".into()));
        }
        let (lum_cs, _) = ssim_pass(a, b, window, dynamic_range);
        return Ok(MsSsim {
            score: lum_cs.clamp(0.0, 1.0),
            scales_used: 1,
            fallback: true,
        });
    }

    // how many halvings keep the image at least one window wide
    let mut scales = 1;
    let mut s = side;
    while scales < SCALE_WEIGHTS.len() && s / 2 >= WINDOW {
        s /= 2;
        scales += 1;
    }
    let weight_total: f64 = SCALE_WEIGHTS[..scales].iter().sum();

    let mut cur_a = a.clone();
    let mut cur_b = b.clone();
    let mut score = 1.0;
    for scale in 0..scales {
        let (lum_cs, cs) = ssim_pass(&cur_a, &cur_b, WINDOW, dynamic_range);
        let weight = SCALE_WEIGHTS[scale] / weight_total;
        let term = if scale == scales - 1 { lum_cs } else { cs };
        score *= term.max(0.0).powf(weight);
        if scale != scales - 1 {
            cur_a = downsample(&cur_a);
            cur_b = downsample(&cur_b);
        }
    }
    Ok(MsSsim {
        score: score.clamp(0.0, 1.0),
        scales_used: scales,
        fallback: false,
    })
}

/// Mean similarity over random distinct sample pairs; the standard diversity
/// proxy (lower means more diverse samples).
pub fn diversity_msssim(
    samples: &[Tensor],
    n_pairs: usize,
    dynamic_range: f64,
    seed: u64,
) -> Result<f64> {
    if samples.len() < 2 {
        return Err(LccError::Config("need at least 2 samples".into()));
    }
    if n_pairs == 0 {
        return Err(LccError::Config("need at least 1 pair".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..n_pairs {
        let i = rng.gen_range(0..samples.len());
        let j = loop {
            let j = rng.gen_range(0..samples.len());
            if j != i {
                break j;
            }
        };
        total += ms_ssim(&samples[i], &samples[j], dynamic_range)?.score;
    }
    Ok(total / n_pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Tensor {
        let mut data = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                data.push(f(y, x));
            }
        }
        Tensor::matrix(side, side, data).unwrap()
    }

    #[test]
    fn self_similarity_is_exactly_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for side in [8usize, 16, 32] {
            let img = image(side, |_, _| rng.gen_range(-1.0..1.0));
            let r = ms_ssim(&img, &img, 2.0).unwrap();
            assert_eq!(r.score, 1.0, "side {side}");
        }
    }

    #[test]
    fn constant_offset_penalizes_luminance() {
        let a = image(16, |_, _| 0.0);
        let b = image(16, |_, _| 0.5);
        let r = ms_ssim(&a, &b, 2.0).unwrap();
        assert!(r.score < 1.0, "score {}", r.score);
    }

    #[test]
    fn checkerboard_vs_shift_scores_below_point_nine() {
        let a = image(16, |y, x| if (y + x) % 2 == 0 { 1.0 } else { -1.0 });
        let b = image(16, |y, x| if (y + x + 1) % 2 == 0 { 1.0 } else { -1.0 });
        let r = ms_ssim(&a, &b, 2.0).unwrap();
        assert!(r.score < 0.9, "score {}", r.score);
    }

    #[test]
    fn symmetric_in_its_arguments() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let a = image(16, |_, _| rng.gen_range(-1.0..1.0));
        let b = image(16, |_, _| rng.gen_range(-1.0..1.0));
        let ab = ms_ssim(&a, &b, 2.0).unwrap();
        let ba = ms_ssim(&b, &a, 2.0).unwrap();
        assert_eq!(ab.score, ba.score);
    }

    #[test]
    fn score_stays_in_unit_interval() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = image(12, |_, _| rng.gen_range(-1.0..1.0));
            let b = image(12, |_, _| rng.gen_range(-1.0..1.0));
            let r = ms_ssim(&a, &b, 2.0).unwrap();
            assert!((0.0..=1.0).contains(&r.score));
        }
    }

    #[test]
    fn small_image_takes_the_fallback_path() {
        let a = image(8, |y, x| (y * 8 + x) as f64 / 64.0);
        let b = image(8, |y, x| 1.0 - (y * 8 + x) as f64 / 64.0);
        let r = ms_ssim(&a, &b, 2.0).unwrap();
        assert!(r.fallback);
        assert_eq!(r.scales_used, 1);
        let same = ms_ssim(&a, &a, 2.0).unwrap();
        assert_eq!(same.score, 1.0);
    }

    #[test]
    fn large_image_uses_multiple_scales() {
        let a = image(64, |y, x| ((y as f64 * 0.3).sin() + (x as f64 * 0.2).cos()) / 2.0);
        let r = ms_ssim(&a, &a, 2.0).unwrap();
        assert!(!r.fallback);
        assert!(r.scales_used >= 2, "scales {}", r.scales_used);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = image(16, |_, _| 0.0);
        let b = image(12, |_, _| 0.0);
        assert!(ms_ssim(&a, &b, 2.0).is_err());
    }

    #[test]
    fn diversity_of_identical_samples_is_one() {
        let img = image(16, |y, x| ((y * 3 + x) % 7) as f64 / 7.0);
        let samples = vec![img.clone(), img.clone(), img];
        let d = diversity_msssim(&samples, 20, 2.0, 0).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn two_distinct_images_give_their_pair_score() {
        let a = image(16, |_, _| 0.2);
        let b = image(16, |y, x| if (y / 4 + x / 4) % 2 == 0 { 0.9 } else { -0.9 });
        let pair = ms_ssim(&a, &b, 2.0).unwrap().score;
        let d = diversity_msssim(&[a, b], 50, 2.0, 1).unwrap();
        assert!((d - pair).abs() < 1e-12, "{d} vs {pair}");
    }

    #[test]
    fn random_noise_is_structurally_dissimilar() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let samples: Vec<Tensor> = (0..60)
            .map(|_| image(16, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let d = diversity_msssim(&samples, 200, 2.0, 4).unwrap();
        assert!(d < 0.2, "mean similarity {d}");
    }

    #[test]
    fn diversity_deterministic_under_seed() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let samples: Vec<Tensor> = (0..10)
            .map(|_| image(16, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let a = diversity_msssim(&samples, 30, 2.0, 9).unwrap();
        let b = diversity_msssim(&samples, 30, 2.0, 9).unwrap();
        assert_eq!(a, b);
    }
}
