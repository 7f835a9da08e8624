//! Trains a small autoencoder on the swiss roll and reports how the
//! reconstruction error falls over the epochs.

use lccgen::autoencoder::{embed, reconstruction_mse, train_ae, AeTrainConfig};
use lccgen::data::{generate, ManifoldSpec};

fn main() -> lccgen::Result<()> {
    let ds = generate(&ManifoldSpec::swiss_roll(0.05, 1), 1000)?.normalize();

    let mut cfg = AeTrainConfig::new(2, 40, 0);
    cfg.hidden_width = 32;
    let res = train_ae(&ds, &cfg)?;

    for (epoch, loss) in res.loss_curve.iter().enumerate().step_by(5) {
        println!("epoch {epoch:>3}: reconstruction mse {loss:.6}");
    }
    println!("final reconstruction mse: {:.6}", reconstruction_mse(&res.ae, &ds)?);

    let latents = embed(&res.ae, &ds)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in latents.data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    println!(
        "latent embedding: {} points in R^{}, values in [{lo:.3}, {hi:.3}]",
        latents.rows(),
        latents.cols()
    );
    Ok(())
}
