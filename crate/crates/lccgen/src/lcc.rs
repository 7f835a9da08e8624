//! Local coordinate coding: anchor learning and sparse affine codings.
//!
//! The coding step minimizes, for each latent point `h`,
//!
//! ```text
//! f(gamma) = 2*L_h*||h - V*gamma||^2 + L_G * sum_j |gamma_j| * ||v_j - h||^2
//! subject to sum(gamma) = 1
//! ```
//!
//! (squared residual in the smooth term; the unsquared objective is also
//! computed for reporting). Anchors are updated by solving the normal
//! equations of the same objective with codings fixed, alternating until the
//! outer iteration budget is spent.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LccError, Result};
use crate::kmeans::kmeans;
use crate::tensor::{dist2, Tensor};

/// The learned anchor set, together with the objective weights it was
/// trained under.
#[derive(Debug, Clone)]
pub struct Dictionary {
    /// `M x d_B`; row `j` is anchor `v_j`.
    anchors: Tensor,
    pub lipschitz_h: f64,
    pub lipschitz_g: f64,
}

impl Dictionary {
    pub fn new(anchors: Tensor, lipschitz_h: f64, lipschitz_g: f64) -> Result<Self> {
        let m = anchors.rows();
        if m < 2 {
            return Err(LccError::Config(format!("need at least 2 anchors, got {m}")));
        }
        if lipschitz_h <= 0.0 || lipschitz_g <= 0.0 {
            return Err(LccError::Config("Lipschitz weights must be positive".into()));
        }
        for j in 0..m {
            for k in (j + 1)..m {
                if dist2(anchors.row(j), anchors.row(k)) <= 1e-12 {
                    return Err(LccError::Contract(format!(
                        "anchors {j} and {k} coincide"
                    )));
                }
            }
        }
        Ok(Self { anchors, lipschitz_h, lipschitz_g })
    }

    pub fn num_anchors(&self) -> usize {
        self.anchors.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.anchors.cols()
    }

    pub fn anchor(&self, j: usize) -> &[f64] {
        self.anchors.row(j)
    }

    pub fn anchors(&self) -> &Tensor {
        &self.anchors
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DictionaryCheckpoint {
    pub anchors: Vec<Vec<f64>>,
    pub lipschitz_h: f64,
    pub lipschitz_g: f64,
}

impl DictionaryCheckpoint {
    pub fn from_dictionary(dict: &Dictionary) -> Self {
        Self {
            anchors: (0..dict.num_anchors())
                .map(|j| dict.anchor(j).to_vec())
                .collect(),
            lipschitz_h: dict.lipschitz_h,
            lipschitz_g: dict.lipschitz_g,
        }
    }

    pub fn into_dictionary(self) -> Result<Dictionary> {
        let m = self.anchors.len();
        let d = self.anchors.first().map(|a| a.len()).unwrap_or(0);
        let flat: Vec<f64> = self.anchors.into_iter().flatten().collect();
        Dictionary::new(Tensor::matrix(m, d, flat)?, self.lipschitz_h, self.lipschitz_g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodingOrigin {
    Optimized,
    Sampled,
}

/// An M-vector of anchor weights paired with its provenance. Entries outside
/// the support are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Coding {
    gamma: Vec<f64>,
    support: Vec<usize>,
    pub origin: CodingOrigin,
}

impl Coding {
    pub fn new(gamma: Vec<f64>, origin: CodingOrigin) -> Self {
        let support = gamma
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self { gamma, support, origin }
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.gamma.iter().sum()
    }

    pub fn one_hot(m: usize, j: usize, origin: CodingOrigin) -> Self {
        let mut gamma = vec![0.0; m];
        gamma[j] = 1.0;
        Self::new(gamma, origin)
    }
}

/// `V * gamma`: the physical approximation `r(h)` of the coded point.
pub fn reconstruct(dict: &Dictionary, coding: &Coding) -> Result<Vec<f64>> {
    if coding.len() != dict.num_anchors() {
        return Err(LccError::Dimension(format!(
            "coding length {} vs {} anchors",
            coding.len(),
            dict.num_anchors()
        )));
    }
    let d = dict.latent_dim();
    let mut out = vec![0.0; d];
    for &j in coding.support() {
        let g = coding.gamma[j];
        for (o, v) in out.iter_mut().zip(dict.anchor(j)) {
            *o += g * v;
        }
    }
    Ok(out)
}

/// Per-point value of the squared-variant objective.
fn point_objective(dict: &Dictionary, h: &[f64], gamma: &[f64]) -> f64 {
    let d = dict.latent_dim();
    let mut r = vec![0.0; d];
    for (j, &g) in gamma.iter().enumerate() {
        if g != 0.0 {
            for (o, v) in r.iter_mut().zip(dict.anchor(j)) {
                *o += g * v;
            }
        }
    }
    let resid2: f64 = r.iter().zip(h).map(|(a, b)| (a - b) * (a - b)).sum();
    let mut penalty = 0.0;
    for (j, &g) in gamma.iter().enumerate() {
        if g != 0.0 {
            let w = dist2(dict.anchor(j), h);
            penalty += g.abs() * w * w;
        }
    }
    2.0 * dict.lipschitz_h * resid2 + dict.lipschitz_g * penalty
}

/// The Problem-(2) objective (squared-residual variant) over a set of points.
pub fn objective(dict: &Dictionary, points: &Tensor, codings: &[Coding]) -> Result<f64> {
    if points.rows() != codings.len() {
        return Err(LccError::Dimension(format!(
            "{} points vs {} codings",
            points.rows(),
            codings.len()
        )));
    }
    let mut total = 0.0;
    for (i, coding) in codings.iter().enumerate() {
        if coding.len() != dict.num_anchors() {
            return Err(LccError::Dimension("coding length mismatch".into()));
        }
        total += point_objective(dict, points.row(i), coding.gamma());
    }
    Ok(total)
}

/// The objective with the unsquared residual norm, reported for fidelity.
pub fn objective_unsquared(dict: &Dictionary, points: &Tensor, codings: &[Coding]) -> Result<f64> {
    let mut total = 0.0;
    for (i, coding) in codings.iter().enumerate() {
        let h = points.row(i);
        let r = reconstruct(dict, coding)?;
        total += 2.0 * dict.lipschitz_h * dist2(&r, h);
        for &j in coding.support() {
            let w = dist2(dict.anchor(j), h);
            total += dict.lipschitz_g * coding.gamma[j].abs() * w * w;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct CodeResult {
    pub coding: Coding,
    pub converged: bool,
    /// Squared-variant objective at the returned coding.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iters: 2000, tol: 1e-10 }
    }
}

/// Largest eigenvalue of the anchor Gram matrix `V V^T` (`d_B x d_B`), by
/// power iteration from a fixed start vector.
fn anchor_spectral_bound(dict: &Dictionary) -> f64 {
    let d = dict.latent_dim();
    let m = dict.num_anchors();
    let mut gram = vec![0.0; d * d];
    for j in 0..m {
        let v = dict.anchor(j);
        for p in 0..d {
            for q in 0..d {
                gram[p * d + q] += v[p] * v[q];
            }
        }
    }
    let mut x = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = gram.iter().step_by(d + 1).sum::<f64>(); // trace fallback
    for _ in 0..100 {
        let mut y = vec![0.0; d];
        for p in 0..d {
            for q in 0..d {
                y[p] += gram[p * d + q] * x[q];
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            break;
        }
        lambda = norm;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    lambda
}

/// Proximal map of `eta * sum_j w_j |g_j|` restricted to the affine set
/// `sum(g) = 1`: soft-threshold against a shifted input, with the shift found
/// by bisection on the constraint.
fn prox_affine_weighted_l1(z: &[f64], thresh: &[f64]) -> Vec<f64> {
    let soft_sum = |lambda: f64| -> f64 {
        z.iter()
            .zip(thresh)
            .map(|(&zj, &tj)| {
                let x = zj - lambda;
                x.signum() * (x.abs() - tj).max(0.0)
            })
            .sum()
    };
    let scale = z
        .iter()
        .zip(thresh)
        .map(|(&zj, &tj)| zj.abs() + tj)
        .fold(1.0f64, f64::max);
    let mut lo = -2.0 * scale - 1.0;
    let mut hi = 2.0 * scale + 1.0;
    while soft_sum(lo) < 1.0 {
        lo = 2.0 * lo - 1.0;
    }
    while soft_sum(hi) > 1.0 {
        hi = 2.0 * hi + 1.0;
    }
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if soft_sum(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut gamma: Vec<f64> = z
        .iter()
        .zip(thresh)
        .map(|(&zj, &tj)| {
            let x = zj - lambda;
            x.signum() * (x.abs() - tj).max(0.0)
        })
        .collect();
    // close the residual constraint error over the support only, so
    // thresholded entries stay exactly zero
    let err: f64 = gamma.iter().sum::<f64>() - 1.0;
    if err != 0.0 {
        let nz: Vec<usize> = (0..gamma.len()).filter(|&j| gamma[j] != 0.0).collect();
        if !nz.is_empty() {
            let corr = err / nz.len() as f64;
            for j in nz {
                gamma[j] -= corr;
            }
        }
    }
    gamma
}

fn code_point_inner(
    dict: &Dictionary,
    h: &[f64],
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<CodeResult> {
    if h.len() != dict.latent_dim() {
        return Err(LccError::Dimension(format!(
            "point dim {} vs latent dim {}",
            h.len(),
            dict.latent_dim()
        )));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(LccError::Contract("non-finite latent point".into()));
    }
    let m = dict.num_anchors();
    let d = dict.latent_dim();
    let l_h = dict.lipschitz_h;

    // per-anchor l1 weights L_G * ||v_j - h||^2
    let weights: Vec<f64> = (0..m)
        .map(|j| {
            let w = dist2(dict.anchor(j), h);
            dict.lipschitz_g * w * w
        })
        .collect();

    let lipschitz = 4.0 * l_h * anchor_spectral_bound(dict) * 1.01 + 1e-12;
    let eta = 1.0 / lipschitz;
    let thresh: Vec<f64> = weights.iter().map(|w| eta * w).collect();

    let eval = |gamma: &[f64]| point_objective(dict, h, gamma);

    let uniform = vec![1.0 / m as f64; m];
    let mut gamma = match warm {
        Some(w) if eval(w) < eval(&uniform) => w.to_vec(),
        _ => uniform.clone(),
    };
    let mut best = gamma.clone();
    let mut best_obj = eval(&best);

    // FISTA with best-iterate tracking
    let mut y = gamma.clone();
    let mut t = 1.0f64;
    let mut converged = false;
    let mut resid = vec![0.0; d];
    for _ in 0..opts.max_iters {
        // gradient of 2*L_h*||h - V*y||^2 at y
        resid.iter_mut().for_each(|v| *v = 0.0);
        for (j, &g) in y.iter().enumerate() {
            if g != 0.0 {
                for (o, v) in resid.iter_mut().zip(dict.anchor(j)) {
                    *o += g * v;
                }
            }
        }
        for (o, hv) in resid.iter_mut().zip(h) {
            *o -= hv;
        }
        let z: Vec<f64> = (0..m)
            .map(|j| {
                let grad: f64 = 4.0
                    * l_h
                    * dict
                        .anchor(j)
                        .iter()
                        .zip(&resid)
                        .map(|(v, r)| v * r)
                        .sum::<f64>();
                y[j] - eta * grad
            })
            .collect();
        let next = prox_affine_weighted_l1(&z, &thresh);
        let obj = eval(&next);
        if obj < best_obj {
            best_obj = obj;
            best = next.clone();
        }
        let delta = next
            .iter()
            .zip(&gamma)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if delta < opts.tol {
            converged = true;
            gamma = next;
            break;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&gamma)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        gamma = next;
        t = t_next;
    }
    let _ = gamma;
    Ok(CodeResult {
        coding: Coding::new(best, CodingOrigin::Optimized),
        converged,
        objective: best_obj,
    })
}

/// Solves the constrained weighted-LASSO coding problem for a single latent
/// point. The returned coding sums to one and its objective never exceeds the
/// uniform coding's.
pub fn code_point(dict: &Dictionary, h: &[f64]) -> Result<CodeResult> {
    code_point_inner(dict, h, None, &SolverOptions::default())
}

#[derive(Debug, Clone)]
pub struct LccConfig {
    pub num_anchors: usize,
    pub l_h: f64,
    pub l_g: f64,
    pub outer_iters: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl LccConfig {
    pub fn new(num_anchors: usize, outer_iters: usize, seed: u64) -> Self {
        Self {
            num_anchors,
            l_h: 1.0,
            l_g: 1.0,
            outer_iters,
            seed,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug)]
pub struct LccResult {
    pub dictionary: Dictionary,
    pub codings: Vec<Coding>,
    /// Squared-variant objective after each outer iteration; non-increasing.
    pub objective_trace: Vec<f64>,
    /// Unsquared (Problem-as-written) objective at the final iterate.
    pub final_unsquared_objective: f64,
    /// Mean `||h - r(h)||` over the data at the final iterate.
    pub mean_reconstruction_error: f64,
    pub kmeans_reseed_log: Vec<String>,
}

fn jitter_coincident_anchors(anchors: &mut Tensor) -> usize {
    let m = anchors.rows();
    let d = anchors.cols();
    let mut fixed = 0;
    for j in 0..m {
        for k in (j + 1)..m {
            let dd = dist2(anchors.row(j), anchors.row(k));
            if dd <= 1e-12 {
                anchors.data_mut()[k * d] += 1e-9 * (k + 1) as f64;
                fixed += 1;
            }
        }
    }
    fixed
}

/// Symmetric positive definite solve via Cholesky, `a` is `n x n` row-major,
/// `b` holds `nrhs` right-hand sides of length `n` each.
fn cholesky_solve(a: &[f64], n: usize, b: &mut [Vec<f64>]) -> Result<()> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(LccError::Contract(
                        "anchor update system not positive definite".into(),
                    ));
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    for rhs in b.iter_mut() {
        // forward substitution
        for i in 0..n {
            let mut sum = rhs[i];
            for k in 0..i {
                sum -= l[i * n + k] * rhs[k];
            }
            rhs[i] = sum / l[i * n + i];
        }
        // back substitution
        for i in (0..n).rev() {
            let mut sum = rhs[i];
            for k in (i + 1)..n {
                sum -= l[k * n + i] * rhs[k];
            }
            rhs[i] = sum / l[i * n + i];
        }
    }
    Ok(())
}

/// One least-squares anchor update with codings fixed; returns the candidate
/// anchor matrix.
fn solve_anchor_update(
    points: &Tensor,
    codings: &[Coding],
    anchors: &Tensor,
    l_h: f64,
    l_g: f64,
) -> Result<Tensor> {
    let n = points.rows();
    let d = points.cols();
    let m = anchors.rows();
    // A = 4*L_h*Gamma^T*Gamma + 2*L_G*diag(s) + ridge, shared across dims
    let mut a = vec![0.0; m * m];
    let mut s = vec![0.0; m];
    let mut t = vec![vec![0.0; m]; d];
    let mut bt = vec![vec![0.0; m]; d];
    for i in 0..n {
        let g = codings[i].gamma();
        let h = points.row(i);
        for &j in codings[i].support() {
            for &k in codings[i].support() {
                a[j * m + k] += 4.0 * l_h * g[j] * g[k];
            }
            let absg = g[j].abs();
            s[j] += absg;
            for p in 0..d {
                t[p][j] += absg * h[p];
                bt[p][j] += 4.0 * l_h * g[j] * h[p];
            }
        }
    }
    for j in 0..m {
        a[j * m + j] += 2.0 * l_g * s[j] + 1e-8;
    }
    let mut rhs: Vec<Vec<f64>> = (0..d)
        .map(|p| {
            (0..m)
                .map(|j| bt[p][j] + 2.0 * l_g * t[p][j])
                .collect::<Vec<f64>>()
        })
        .collect();
    cholesky_solve(&a, m, &mut rhs)?;
    let mut new_anchors = vec![0.0; m * d];
    for j in 0..m {
        for p in 0..d {
            new_anchors[j * d + p] = rhs[p][j];
        }
    }
    Ok(Tensor::from_parts_unchecked(vec![m, d], new_anchors))
}

/// Alternating optimization of codings and anchors, k-means initialized.
pub fn learn_dictionary(points: &Tensor, cfg: &LccConfig) -> Result<LccResult> {
    let n = points.rows();
    let m = cfg.num_anchors;
    if m < 2 {
        return Err(LccError::Config("need at least 2 anchors".into()));
    }
    if n < m {
        return Err(LccError::Config(format!("{n} points for {m} anchors")));
    }
    if cfg.outer_iters == 0 {
        return Err(LccError::Config("outer_iters must be positive".into()));
    }
    let km = kmeans(points, m, 20, cfg.seed)?;
    let mut anchors = km.centroids;
    jitter_coincident_anchors(&mut anchors);

    let mut codings: Vec<Coding> = Vec::new();
    let mut trace = Vec::with_capacity(cfg.outer_iters);
    let mut dict = Dictionary::new(anchors, cfg.l_h, cfg.l_g)?;
    for _ in 0..cfg.outer_iters {
        // coding pass, warm-started from the previous outer iteration
        let mut next_codings = Vec::with_capacity(n);
        for i in 0..n {
            let warm = codings.get(i).map(|c: &Coding| c.gamma());
            let res = code_point_inner(&dict, points.row(i), warm, &cfg.solver)?;
            next_codings.push(res.coding);
        }
        codings = next_codings;

        // anchor pass, kept only when it does not worsen the objective
        let before = objective(&dict, points, &codings)?;
        let mut candidate = solve_anchor_update(points, &codings, dict.anchors(), cfg.l_h, cfg.l_g)?;
        jitter_coincident_anchors(&mut candidate);
        let candidate_dict = Dictionary::new(candidate, cfg.l_h, cfg.l_g)?;
        let after = objective(&candidate_dict, points, &codings)?;
        if after <= before {
            dict = candidate_dict;
            trace.push(after);
        } else {
            trace.push(before);
        }
    }
    // final coding pass so the returned codings match the final anchors
    let mut final_codings = Vec::with_capacity(n);
    let mut err_sum = 0.0;
    for i in 0..n {
        let res = code_point_inner(&dict, points.row(i), Some(codings[i].gamma()), &cfg.solver)?;
        let r = reconstruct(&dict, &res.coding)?;
        err_sum += dist2(&r, points.row(i));
        final_codings.push(res.coding);
    }
    let final_unsquared = objective_unsquared(&dict, points, &final_codings)?;
    Ok(LccResult {
        dictionary: dict,
        mean_reconstruction_error: err_sum / n as f64,
        final_unsquared_objective: final_unsquared,
        codings: final_codings,
        objective_trace: trace,
        kmeans_reseed_log: km.reseed_log,
    })
}

/// Sparse triplet export: `point_index,anchor_index,weight` per row.
pub fn codings_to_csv(codings: &[Coding], path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for (i, c) in codings.iter().enumerate() {
        for &j in c.support() {
            writeln!(out, "{},{},{}", i, j, c.gamma()[j])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_anchor_dict(l_h: f64, l_g: f64) -> Dictionary {
        Dictionary::new(Tensor::matrix(2, 1, vec![0.0, 1.0]).unwrap(), l_h, l_g).unwrap()
    }

    /// Dense grid search over gamma_2 with gamma_1 = 1 - gamma_2.
    fn grid_search_two_anchors(dict: &Dictionary, h: &[f64]) -> Vec<f64> {
        let mut best = vec![0.5, 0.5];
        let mut best_obj = f64::INFINITY;
        let mut g2 = -1.0;
        while g2 <= 2.0 {
            let gamma = vec![1.0 - g2, g2];
            let obj = point_objective(dict, h, &gamma);
            if obj < best_obj {
                best_obj = obj;
                best = gamma;
            }
            g2 += 1e-4;
        }
        best
    }

    #[test]
    fn reconstruct_midpoint() {
        let dict = Dictionary::new(
            Tensor::matrix(2, 2, vec![0.0, 0.0, 2.0, 0.0]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let c = Coding::new(vec![0.5, 0.5], CodingOrigin::Optimized);
        assert_eq!(reconstruct(&dict, &c).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn reconstruct_one_hot_selects_anchor() {
        let dict = Dictionary::new(
            Tensor::matrix(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let c = Coding::one_hot(3, 1, CodingOrigin::Optimized);
        assert_eq!(reconstruct(&dict, &c).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn reconstruct_matches_naive_matvec() {
        let dict = Dictionary::new(
            Tensor::matrix(4, 3, (0..12).map(|i| (i as f64) * 0.37 - 1.0).collect()).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let gamma = vec![0.3, -0.1, 0.5, 0.3];
        let c = Coding::new(gamma.clone(), CodingOrigin::Sampled);
        let got = reconstruct(&dict, &c).unwrap();
        for p in 0..3 {
            let expect: f64 = (0..4).map(|j| gamma[j] * dict.anchor(j)[p]).sum();
            assert!((got[p] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruct_rejects_length_mismatch() {
        let dict = two_anchor_dict(1.0, 1.0);
        let c = Coding::new(vec![1.0, 0.0, 0.0], CodingOrigin::Optimized);
        assert!(reconstruct(&dict, &c).is_err());
    }

    #[test]
    fn code_point_one_hot_on_exact_anchor_hit() {
        let dict = Dictionary::new(
            Tensor::matrix(3, 2, vec![0.0, 0.0, 50.0, 0.0, 0.0, 50.0]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let res = code_point(&dict, &[0.0, 0.0]).unwrap();
        assert!(res.objective < 1e-9, "objective {}", res.objective);
        assert!((res.coding.gamma()[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn code_point_matches_grid_search_on_reference_instance() {
        let dict = two_anchor_dict(1.0, 1.0);
        let res = code_point(&dict, &[0.3]).unwrap();
        let oracle = grid_search_two_anchors(&dict, &[0.3]);
        assert!((oracle[0] - 0.8).abs() < 2e-4, "oracle sanity: {oracle:?}");
        for (a, b) in res.coding.gamma().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-3, "{:?} vs {:?}", res.coding.gamma(), oracle);
        }
    }

    #[test]
    fn code_point_sum_is_one() {
        let dict = Dictionary::new(
            Tensor::matrix(5, 2, (0..10).map(|i| (i as f64) * 0.61 - 2.0).collect()).unwrap(),
            1.3,
            0.7,
        )
        .unwrap();
        for k in 0..10 {
            let h = [0.1 * k as f64 - 0.4, 0.2 * k as f64 - 1.0];
            let res = code_point(&dict, &h).unwrap();
            assert!((res.coding.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn code_point_never_beats_uniform_going_up() {
        let dict = Dictionary::new(
            Tensor::matrix(4, 2, vec![0.0, 0.0, 1.0, 0.1, -0.5, 0.7, 0.3, -0.9]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let h = [0.2, 0.2];
        let res = code_point(&dict, &h).unwrap();
        let uniform = vec![0.25; 4];
        assert!(res.objective <= point_objective(&dict, &h, &uniform) + 1e-12);
    }

    #[test]
    fn objective_direct_substitution() {
        // single h at distance 1 from anchor 1, one-hot coding, L_h = L_G = 1
        let dict = two_anchor_dict(1.0, 1.0);
        let h = Tensor::matrix(1, 1, vec![1.0]).unwrap(); // anchor 0 at 0, anchor 1 at 1
        let c = Coding::one_hot(2, 0, CodingOrigin::Optimized); // r(h) = anchor 0, dist 1
        let val = objective(&dict, &h, &[c]).unwrap();
        assert!((val - 3.0).abs() < 1e-12, "value {val}");
    }

    #[test]
    fn objective_zero_on_anchor_interpolation() {
        let dict = two_anchor_dict(1.0, 1.0);
        let h = Tensor::matrix(2, 1, vec![0.0, 1.0]).unwrap();
        let cs = vec![
            Coding::one_hot(2, 0, CodingOrigin::Optimized),
            Coding::one_hot(2, 1, CodingOrigin::Optimized),
        ];
        assert_eq!(objective(&dict, &h, &cs).unwrap(), 0.0);
    }

    #[test]
    fn objective_matches_straight_line_oracle() {
        let dict = Dictionary::new(
            Tensor::matrix(3, 2, vec![0.1, -0.3, 0.8, 0.5, -0.6, 0.2]).unwrap(),
            1.7,
            0.4,
        )
        .unwrap();
        let points = Tensor::matrix(2, 2, vec![0.25, 0.1, -0.2, 0.35]).unwrap();
        let codings = vec![
            Coding::new(vec![0.5, 0.25, 0.25], CodingOrigin::Optimized),
            Coding::new(vec![1.2, -0.3, 0.1], CodingOrigin::Optimized),
        ];
        let got = objective(&dict, &points, &codings).unwrap();
        let mut expect = 0.0;
        for (i, c) in codings.iter().enumerate() {
            let h = points.row(i);
            let mut r = [0.0, 0.0];
            for j in 0..3 {
                for p in 0..2 {
                    r[p] += c.gamma()[j] * dict.anchor(j)[p];
                }
            }
            let resid2: f64 = (0..2).map(|p| (r[p] - h[p]) * (r[p] - h[p])).sum();
            expect += 2.0 * 1.7 * resid2;
            for j in 0..3 {
                let d2: f64 = (0..2)
                    .map(|p| (dict.anchor(j)[p] - h[p]) * (dict.anchor(j)[p] - h[p]))
                    .sum();
                expect += 0.4 * c.gamma()[j].abs() * d2 * d2.sqrt().powi(0); // squared distance
            }
        }
        // second term uses squared distance, recompute cleanly
        let mut expect2 = 0.0;
        for (i, c) in codings.iter().enumerate() {
            let h = points.row(i);
            let mut r = [0.0, 0.0];
            for j in 0..3 {
                for p in 0..2 {
                    r[p] += c.gamma()[j] * dict.anchor(j)[p];
                }
            }
            let resid2: f64 = (0..2).map(|p| (r[p] - h[p]) * (r[p] - h[p])).sum();
            expect2 += 2.0 * 1.7 * resid2;
            for j in 0..3 {
                let d2: f64 = (0..2)
                    .map(|p| (dict.anchor(j)[p] - h[p]) * (dict.anchor(j)[p] - h[p]))
                    .sum();
                expect2 += 0.4 * c.gamma()[j].abs() * d2;
            }
        }
        let _ = expect;
        assert!((got - expect2).abs() < 1e-12);
    }

    #[test]
    fn interpolation_recovers_anchor_points() {
        // M distinct points: anchors converge onto them, objective near zero
        let points = Tensor::matrix(4, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let res = learn_dictionary(&points, &LccConfig::new(4, 10, 0)).unwrap();
        assert!(
            *res.objective_trace.last().unwrap() < 1e-6,
            "final objective {}",
            res.objective_trace.last().unwrap()
        );
        for i in 0..4 {
            let nearest = (0..4)
                .map(|j| dist2(res.dictionary.anchor(j), points.row(i)))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-3, "point {i} has no nearby anchor ({nearest})");
        }
    }

    #[test]
    fn trace_is_monotone_non_increasing() {
        let mut data = Vec::new();
        for i in 0..60 {
            let t = i as f64 / 59.0 * std::f64::consts::TAU;
            data.push(t.cos() + 0.05 * (i as f64 * 7.7).sin());
            data.push(t.sin() * 0.7);
        }
        let points = Tensor::matrix(60, 2, data).unwrap();
        let res = learn_dictionary(&points, &LccConfig::new(8, 20, 3)).unwrap();
        assert_eq!(res.objective_trace.len(), 20);
        for w in res.objective_trace.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-8),
                "objective increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn optimized_codings_sum_to_one_after_learning() {
        let points = Tensor::matrix(
            30,
            2,
            (0..60).map(|i| ((i * 37) % 100) as f64 / 50.0 - 1.0).collect(),
        )
        .unwrap();
        let res = learn_dictionary(&points, &LccConfig::new(5, 5, 7)).unwrap();
        for c in &res.codings {
            assert!((c.sum() - 1.0).abs() < 1e-9);
            assert_eq!(c.origin, CodingOrigin::Optimized);
        }
    }

    #[test]
    fn locality_of_optimized_codings() {
        // the heaviest anchor of each coding should be near the coded point
        let mut data = Vec::new();
        for i in 0..200 {
            let t = i as f64 / 199.0 * std::f64::consts::TAU;
            data.push(1.5 * t.cos());
            data.push(1.5 * t.sin());
        }
        let points = Tensor::matrix(200, 2, data).unwrap();
        let res = learn_dictionary(&points, &LccConfig::new(16, 10, 1)).unwrap();
        let mut ok = 0;
        for (i, c) in res.codings.iter().enumerate() {
            let h = points.row(i);
            let heaviest = (0..16)
                .max_by(|&a, &b| {
                    c.gamma()[a]
                        .abs()
                        .partial_cmp(&c.gamma()[b].abs())
                        .unwrap()
                        .then(b.cmp(&a))
                })
                .unwrap();
            let mut by_dist: Vec<usize> = (0..16).collect();
            by_dist.sort_by(|&a, &b| {
                dist2(res.dictionary.anchor(a), h)
                    .partial_cmp(&dist2(res.dictionary.anchor(b), h))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            if by_dist[..4].contains(&heaviest) {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.9 * 200.0, "locality held for {ok}/200 points");
    }

    #[test]
    fn dictionary_rejects_coincident_anchors() {
        let anchors = Tensor::matrix(2, 2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(Dictionary::new(anchors, 1.0, 1.0).is_err());
    }

    #[test]
    fn dictionary_checkpoint_round_trips() {
        let dict = Dictionary::new(
            Tensor::matrix(3, 2, vec![0.0, 0.1, 1.0, -0.2, 0.5, 0.9]).unwrap(),
            1.5,
            0.5,
        )
        .unwrap();
        let ckpt = DictionaryCheckpoint::from_dictionary(&dict);
        let json = serde_json::to_string(&ckpt).unwrap();
        let back: DictionaryCheckpoint = serde_json::from_str(&json).unwrap();
        let dict2 = back.into_dictionary().unwrap();
        assert_eq!(dict.anchors(), dict2.anchors());
        assert_eq!(dict.lipschitz_h, dict2.lipschitz_h);
    }
}
