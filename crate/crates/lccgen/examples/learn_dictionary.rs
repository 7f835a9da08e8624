//! Learns an anchor dictionary over 2-d latent points and shows that the
//! alternating optimization drives the coding objective down monotonically.

use lccgen::lcc::{learn_dictionary, LccConfig};
use lccgen::tensor::Tensor;

fn main() -> lccgen::Result<()> {
    // latent points on a unit circle: a 1-d manifold inside R^2
    let n = 400;
    let mut flat = Vec::with_capacity(n * 2);
    for i in 0..n {
        let t = i as f64 / n as f64 * std::f64::consts::TAU;
        flat.push(t.cos());
        flat.push(t.sin());
    }
    let points = Tensor::matrix(n, 2, flat)?;

    let cfg = LccConfig::new(12, 15, 0);
    let res = learn_dictionary(&points, &cfg)?;

    for (i, obj) in res.objective_trace.iter().enumerate() {
        println!("outer iter {i:>2}: objective {obj:.6}");
    }
    println!("mean reconstruction error: {:.6}", res.mean_reconstruction_error);
    println!("unsquared-penalty objective: {:.6}", res.final_unsquared_objective);

    // every coding is a sparse affine combination: weights sum to one
    let worst_sum_err = res
        .codings
        .iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0f64, f64::max);
    let max_support = res.codings.iter().map(|c| c.support().len()).max().unwrap();
    println!("worst |sum(gamma) - 1|: {worst_sum_err:.2e}");
    println!("largest coding support: {max_support} of {} anchors", cfg.num_anchors);
    Ok(())
}
