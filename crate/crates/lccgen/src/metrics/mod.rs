//! Measurable quantities for trained models: neural-network distance,
//! Rademacher complexity, Lipschitz constants, approximation-inequality
//! checks, image similarity, mode coverage and the generalization-gap
//! harness.

mod coverage;
mod gap;
mod lipschitz;
mod msssim;
mod nn_distance;
mod quality;
mod rademacher;

pub use coverage::{mode_coverage, CoverageReport};
pub use gap::{gap_harness, gap_report_csv, GapConfig, GapReport, GAP_CSV_HEADER};
pub use lipschitz::{estimate_lipschitz, phi_bound, phi_slope, FunctionLipschitz, LipschitzEstimate};
pub use msssim::{diversity_msssim, ms_ssim, MsSsim};
pub use nn_distance::{estimate_nn_distance, NnDistance};
pub use quality::{check_lemma1, check_lemma2, generative_quality, LemmaReport};
pub use rademacher::estimate_rademacher;

use serde::{Deserialize, Serialize};

/// The discriminator class the sup in a distance or complexity estimate
/// ranges over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscClass {
    /// The singleton class `{D == c}`; no optimization freedom at all.
    Constant(f64),
    /// Fully shattering: an independent value in `[0, 1]` per sample point,
    /// solved exactly instead of by gradient ascent.
    Tabular,
    /// A small sigmoid-headed network trained by Adam ascent.
    Mlp { hidden: usize },
}
