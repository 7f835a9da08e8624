//! Draws random codings around a fixed anchor set and shows their locality:
//! each draw touches only the d anchors nearest a randomly chosen seed point.

use lccgen::lcc::{reconstruct, Dictionary};
use lccgen::sampler::{LccSampler, PriorMode, SamplerConfig};
use lccgen::tensor::Tensor;

fn main() -> lccgen::Result<()> {
    // eight anchors on a circle
    let m = 8;
    let mut flat = Vec::with_capacity(m * 2);
    for j in 0..m {
        let t = j as f64 / m as f64 * std::f64::consts::TAU;
        flat.push(t.cos());
        flat.push(t.sin());
    }
    let dict = Dictionary::new(Tensor::matrix(m, 2, flat)?, 1.0, 1.0)?;

    for prior in [PriorMode::StandardGaussian, PriorMode::NormalizedGaussian] {
        let cfg = SamplerConfig { d: 3, prior, seed: 7 };
        let mut sampler = LccSampler::new(&dict, &cfg)?;
        println!("{prior:?}:");
        for _ in 0..4 {
            let coding = sampler.sample_coding();
            let point = reconstruct(&dict, &coding)?;
            let weights: Vec<String> = coding
                .support()
                .iter()
                .map(|&j| format!("a{j}={:+.3}", coding.gamma()[j]))
                .collect();
            println!(
                "  support {:?} -> point ({:+.3}, {:+.3})  [{}]  sum {:.3}",
                coding.support(),
                point[0],
                point[1],
                weights.join(", "),
                coding.sum()
            );
        }
    }
    Ok(())
}
