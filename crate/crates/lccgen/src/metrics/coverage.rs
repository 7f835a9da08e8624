//! Mode coverage: which of a known set of mode centers the samples reach.

use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::tensor::{dist2, Tensor};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Number of modes with at least 1% of the samples within the radius of
    /// their center.
    pub covered: usize,
    pub total_modes: usize,
    /// Per-mode count of samples whose nearest center is this mode and that
    /// lie within the radius.
    pub histogram: Vec<usize>,
}

pub fn mode_coverage(samples: &Tensor, centers: &Tensor, radius: f64) -> Result<CoverageReport> {
    if centers.rows() == 0 {
        return Err(LccError::Config("no mode centers".into()));
    }
    if radius <= 0.0 {
        return Err(LccError::Config("radius must be positive".into()));
    }
    if samples.cols() != centers.cols() {
        return Err(LccError::Dimension(format!(
            "sample dim {} vs center dim {}",
            samples.cols(),
            centers.cols()
        )));
    }
    let k = centers.rows();
    let n = samples.rows();
    let mut histogram = vec![0usize; k];
    for i in 0..n {
        let (best, best_d) = (0..k)
            .map(|j| (j, dist2(samples.row(i), centers.row(j))))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .expect("k >= 1");
        if best_d <= radius {
            histogram[best] += 1;
        }
    }
    let threshold = 0.01 * n as f64;
    let covered = histogram.iter().filter(|&&c| c as f64 >= threshold && c > 0).count();
    Ok(CoverageReport {
        covered,
        total_modes: k,
        histogram,
    })
}
