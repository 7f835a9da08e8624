//! Estimates the discriminator-class distance between sample sets and the
//! empirical Rademacher complexity of the class, two quantities the
//! generalization bound is built from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use lccgen::gan::Phi;
use lccgen::metrics::{estimate_nn_distance, estimate_rademacher, DiscClass};
use lccgen::tensor::Tensor;

fn gaussian(n: usize, mean: f64, seed: u64) -> Tensor {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(mean, 1.0).unwrap();
    let flat: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    Tensor::matrix(n, 1, flat).unwrap()
}

fn main() -> lccgen::Result<()> {
    let class = DiscClass::Mlp { hidden: 16 };

    println!("distance grows with the separation of two gaussians:");
    let mu = gaussian(1000, 0.0, 0);
    for (i, mean) in [0.0, 0.5, 1.0, 2.0].iter().enumerate() {
        let nu = gaussian(1000, *mean, 10 + i as u64);
        let d = estimate_nn_distance(&mu, &nu, Phi::Identity, &class, 1)?;
        println!("  mean gap {mean}: distance {:.4}", d.value);
    }

    println!("complexity shrinks with the class and grows with its capacity:");
    let samples = gaussian(200, 0.0, 2);
    for (label, cls) in [
        ("singleton", DiscClass::Constant(0.5)),
        ("width-4 net", DiscClass::Mlp { hidden: 4 }),
        ("width-64 net", DiscClass::Mlp { hidden: 64 }),
        ("shattering", DiscClass::Tabular),
    ] {
        let r = estimate_rademacher(&samples, Phi::Identity, &cls, 5, 3)?;
        println!("  {label}: {r:.4}");
    }

    // heavier noise in the sign draws averages out with more draws
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let wide: Vec<f64> = (0..100).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let wide = Tensor::matrix(100, 1, wide)?;
    let r = estimate_rademacher(&wide, Phi::Identity, &DiscClass::Tabular, 20, 5)?;
    println!("shattering class on 100 points, 20 draws: {r:.4} (analytic limit 0.5)");
    Ok(())
}
