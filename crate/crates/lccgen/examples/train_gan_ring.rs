//! Trains a small generator/discriminator pair on a ring of Gaussians with
//! coding-based generator inputs, then checks how many modes the samples hit.
//!
//! Runs a deliberately short training budget so the example finishes in well
//! under a minute; expect partial coverage.

use lccgen::autoencoder::{embed, train_ae, AeTrainConfig};
use lccgen::data::{generate, ManifoldSpec};
use lccgen::gan::{gan_train, GanConfig};
use lccgen::lcc::{learn_dictionary, LccConfig};
use lccgen::metrics::mode_coverage;
use lccgen::sampler::{LccSampler, SamplerConfig};
use lccgen::tensor::Tensor;

fn main() -> lccgen::Result<()> {
    let spec = ManifoldSpec::ring(8, 2.0, 0.05, 0);
    let ds = generate(&spec, 1000)?.normalize();

    let mut ae_cfg = AeTrainConfig::new(2, 20, 1);
    ae_cfg.hidden_width = 32;
    let ae = train_ae(&ds, &ae_cfg)?.ae;
    let latents = embed(&ae, &ds)?;

    let dict = learn_dictionary(&latents, &LccConfig::new(16, 8, 2))?.dictionary;

    let mut gan_cfg = GanConfig::new(300, 2, 3);
    gan_cfg.hidden_width = 32;
    let res = gan_train(&ds.samples, &dict, &gan_cfg, None)?;
    let last = res.log.last().unwrap();
    println!(
        "after {} iterations: disc objective {:.4}, gen objective {:.4}",
        res.log.len(),
        last.disc_objective,
        last.gen_objective
    );

    // sample the generator through fresh codings
    let mut sampler = LccSampler::new(&dict, &SamplerConfig::new(2, 4))?;
    let (_, z) = sampler.sample_batch_with_latents(500)?;
    let samples = res.model.generate_from_latents(&z)?;

    // mode centers in the normalized coordinates the model was trained in
    let norm = ds.normalization.as_ref().unwrap();
    let centers_raw = spec.mode_centers().unwrap();
    let mut flat = Vec::new();
    for c in &centers_raw {
        for (j, v) in c.iter().enumerate() {
            flat.push((v - norm.shift[j]) / norm.scale[j]);
        }
    }
    let centers = Tensor::matrix(centers_raw.len(), 2, flat)?;
    let report = mode_coverage(&samples, &centers, 0.3)?;
    println!(
        "modes covered: {}/{}  histogram {:?}",
        report.covered, report.total_modes, report.histogram
    );
    Ok(())
}
