//! k-means with k-means++ seeding, used to initialize the anchor set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{LccError, Result};
use crate::tensor::{dist2, Tensor};

pub struct KMeansResult {
    /// `k x d` centroid matrix.
    pub centroids: Tensor,
    pub assignments: Vec<usize>,
    /// One entry per degenerate cluster that had to be re-seeded.
    pub reseed_log: Vec<String>,
}

pub fn kmeans(points: &Tensor, k: usize, iters: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.rows();
    let d = points.cols();
    if k == 0 || k > n {
        return Err(LccError::Config(format!("k = {k} for {n} points")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points.row(rng.gen_range(0..n)).to_vec());
    let mut d2 = vec![0.0f64; n];
    while centroids.len() < k {
        let mut total = 0.0;
        for i in 0..n {
            let best = centroids
                .iter()
                .map(|c| {
                    let dd = dist2(points.row(i), c);
                    dd * dd
                })
                .fold(f64::INFINITY, f64::min);
            d2[i] = best;
            total += best;
        }
        let idx = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(points.row(idx).to_vec());
    }

    let mut assignments = vec![0usize; n];
    let mut reseed_log = Vec::new();
    for it in 0..iters {
        for i in 0..n {
            let (best, _) = centroids
                .iter()
                .enumerate()
                .map(|(j, c)| (j, dist2(points.row(i), c)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
                .expect("k >= 1");
            assignments[i] = best;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignments[i]] += 1;
            for (s, v) in sums[assignments[i]].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let idx = rng.gen_range(0..n);
                centroids[j] = points.row(idx).to_vec();
                reseed_log.push(format!(
                    "iteration {it}: cluster {j} empty, re-seeded from point {idx}"
                ));
            } else {
                for (c, s) in centroids[j].iter_mut().zip(&sums[j]) {
                    *c = s / counts[j] as f64;
                }
            }
        }
    }
    // final assignment pass against the converged centroids
    for i in 0..n {
        let (best, _) = centroids
            .iter()
            .enumerate()
            .map(|(j, c)| (j, dist2(points.row(i), c)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .expect("k >= 1");
        assignments[i] = best;
    }
    let flat: Vec<f64> = centroids.into_iter().flatten().collect();
    Ok(KMeansResult {
        centroids: Tensor::matrix(k, d, flat)?,
        assignments,
        reseed_log,
    })
}
