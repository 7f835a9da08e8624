//! Generative quality of a coding scheme and the two approximation
//! inequalities a smooth generator must satisfy over it.

use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::lcc::{reconstruct, Coding, Dictionary};
use crate::metrics::lipschitz::LipschitzEstimate;
use crate::nn::{forward, NetworkParams};
use crate::tensor::{dist2, Tensor};

/// Mean over points of `L_h ||h - r(h)|| + L_G sum_v |gamma_v| ||v - r(h)||^2`
/// where `r(h) = V*gamma(h)`. Small values mean the codings place every point
/// close to an affine combination of nearby anchors.
pub fn generative_quality(
    dict: &Dictionary,
    points: &Tensor,
    codings: &[Coding],
    l_h: f64,
    l_g: f64,
) -> Result<f64> {
    if codings.is_empty() {
        return Err(LccError::Config("no codings".into()));
    }
    if points.rows() != codings.len() {
        return Err(LccError::Dimension(format!(
            "{} points vs {} codings",
            points.rows(),
            codings.len()
        )));
    }
    let mut total = 0.0;
    for (i, c) in codings.iter().enumerate() {
        let h = points.row(i);
        let r = reconstruct(dict, c)?;
        let mut penalty = 0.0;
        for &j in c.support() {
            penalty += c.gamma()[j].abs() * dist2(dict.anchor(j), &r).powi(2);
        }
        total += l_h * dist2(&r, h) + l_g * penalty;
    }
    Ok(total / codings.len() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub holds_fraction: f64,
    pub min_margin: f64,
    pub mean_margin: f64,
    pub n: usize,
}

const HOLD_EPS: f64 = 1e-12;

fn summarize(margins: Vec<f64>) -> LemmaReport {
    let n = margins.len();
    let holds = margins.iter().filter(|&&m| m >= -HOLD_EPS).count();
    let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = margins.iter().sum::<f64>() / n as f64;
    LemmaReport {
        holds_fraction: holds as f64 / n as f64,
        min_margin: min,
        mean_margin: mean,
        n,
    }
}

fn row_tensor(v: &[f64]) -> Tensor {
    Tensor::from_parts_unchecked(vec![1, v.len()], v.to_vec())
}

/// Checks, per coding, that the generator's deviation from anchor-image
/// mixing is controlled by the coding residual:
/// `||G(V*gamma) - sum_v gamma_v G(v)|| <= 2 L_h ||h - r(h)|| + L_G sum |gamma_v| ||v - r(h)||^2`.
/// Margin is RHS minus LHS.
pub fn check_lemma1(
    gen: &NetworkParams,
    dict: &Dictionary,
    points: &Tensor,
    codings: &[Coding],
    lip: &LipschitzEstimate,
) -> Result<LemmaReport> {
    if codings.is_empty() {
        return Err(LccError::Config("no codings".into()));
    }
    // anchor images are shared across codings
    let anchor_images = forward(gen, dict.anchors())?;
    let out_dim = anchor_images.cols();
    let mut margins = Vec::with_capacity(codings.len());
    for (i, c) in codings.iter().enumerate() {
        let h = points.row(i);
        let r = reconstruct(dict, c)?;
        let g_r = forward(gen, &row_tensor(&r))?;
        let mut mix = vec![0.0; out_dim];
        for &j in c.support() {
            for (m, v) in mix.iter_mut().zip(anchor_images.row(j)) {
                *m += c.gamma()[j] * v;
            }
        }
        let lhs = dist2(g_r.data(), &mix);
        let mut penalty = 0.0;
        for &j in c.support() {
            penalty += c.gamma()[j].abs() * dist2(dict.anchor(j), &r).powi(2);
        }
        let rhs = 2.0 * lip.l_h * dist2(h, &r) + lip.l_g * penalty;
        margins.push(rhs - lhs);
    }
    Ok(summarize(margins))
}

/// Same inequality with the discriminator composed on top:
/// `|D(G(h)) - D(sum_v gamma_v G(v))| <= L_x L_h ||h - r(h)|| + L_x L_G sum |gamma_v| ||v - r(h)||^2`.
pub fn check_lemma2(
    disc: &NetworkParams,
    gen: &NetworkParams,
    dict: &Dictionary,
    points: &Tensor,
    codings: &[Coding],
    lip: &LipschitzEstimate,
) -> Result<LemmaReport> {
    if codings.is_empty() {
        return Err(LccError::Config("no codings".into()));
    }
    let anchor_images = forward(gen, dict.anchors())?;
    let out_dim = anchor_images.cols();
    let mut margins = Vec::with_capacity(codings.len());
    for (i, c) in codings.iter().enumerate() {
        let h = points.row(i);
        let r = reconstruct(dict, c)?;
        let g_h = forward(gen, &row_tensor(h))?;
        let d_gh = forward(disc, &g_h)?.item()?;
        let mut mix = vec![0.0; out_dim];
        for &j in c.support() {
            for (m, v) in mix.iter_mut().zip(anchor_images.row(j)) {
                *m += c.gamma()[j] * v;
            }
        }
        let d_mix = forward(disc, &row_tensor(&mix))?.item()?;
        let lhs = (d_gh - d_mix).abs();
        let mut penalty = 0.0;
        for &j in c.support() {
            penalty += c.gamma()[j].abs() * dist2(dict.anchor(j), &r).powi(2);
        }
        let rhs = lip.l_x * lip.l_h * dist2(h, &r) + lip.l_x * lip.l_g * penalty;
        margins.push(rhs - lhs);
    }
    Ok(summarize(margins))
}
