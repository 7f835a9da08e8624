//! Generates a ring-of-Gaussians dataset, normalizes it into [-1, 1] and
//! prints how the samples distribute over the modes.

use lccgen::data::{generate, ManifoldSpec};
use lccgen::tensor::dist2;

fn main() -> lccgen::Result<()> {
    let spec = ManifoldSpec::ring(8, 2.0, 0.05, 0);
    let ds = generate(&spec, 2000)?;
    println!("{}: {} samples in R^{}", ds.name, ds.len(), ds.dim());

    let centers = spec.mode_centers().expect("ring has known centers");
    let mut counts = vec![0usize; centers.len()];
    for i in 0..ds.len() {
        let (k, _) = centers
            .iter()
            .enumerate()
            .map(|(k, c)| (k, dist2(ds.samples.row(i), c)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        counts[k] += 1;
    }
    for (k, c) in counts.iter().enumerate() {
        println!("mode {k} at ({:+.3}, {:+.3}): {c} samples", centers[k][0], centers[k][1]);
    }

    let normalized = ds.normalize();
    let norm = normalized.normalization.as_ref().unwrap();
    println!(
        "normalized with shift {:?} and scale {:?}",
        norm.shift, norm.scale
    );
    Ok(())
}
