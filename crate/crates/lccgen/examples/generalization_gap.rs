//! Measures the train/heldout distance gap of a generator and compares it to
//! the bound assembled from the Rademacher estimate, the discriminator range
//! and the measured coding quality.

use lccgen::data::{generate, split, ManifoldSpec};
use lccgen::gan::{gan_train, GanConfig, Phi};
use lccgen::lcc::{learn_dictionary, LccConfig};
use lccgen::metrics::{gap_harness, GapConfig};

fn main() -> lccgen::Result<()> {
    let ds = generate(&ManifoldSpec::ring(4, 1.0, 0.05, 0), 600)?.normalize();
    let (train, heldout) = split(&ds, 0.8, 1)?;

    // the 2-d data doubles as its own latent space here, so the dictionary is
    // learned directly on the train samples
    let lcc = learn_dictionary(&train.samples, &LccConfig::new(8, 6, 2))?;

    let mut gan_cfg = GanConfig::new(200, 2, 3);
    gan_cfg.hidden_width = 16;
    gan_cfg.phi = Phi::Identity;
    let model = gan_train(&train.samples, &lcc.dictionary, &gan_cfg, None)?.model;

    let mut cfg = GapConfig::new(2, 4);
    cfg.n_generated = 200;
    cfg.rademacher_draws = 5;
    let report = gap_harness(
        &model,
        &lcc.dictionary,
        &train.samples,
        &train.samples,
        &heldout.samples,
        &cfg,
    )?;

    println!("distance to train set:   {:.5}", report.train_distance);
    println!("distance to heldout set: {:.5}", report.heldout_distance);
    println!("gap:                     {:.5}", report.gap);
    println!("rademacher estimate:     {:.5}", report.rademacher_estimate);
    println!("coding quality term:     {:.5}", report.quality);
    println!("bound:                   {:.5}", report.bound_value);
    assert!(report.gap <= report.bound_value);
    println!("gap sits under the bound, as it must");
    Ok(())
}
