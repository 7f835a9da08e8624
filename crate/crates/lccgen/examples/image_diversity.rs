//! Scores sample diversity with multi-scale structural similarity on a toy
//! digit dataset and writes a PGM contact sheet of the first few glyphs.

use lccgen::data::synthetic_digits;
use lccgen::metrics::{diversity_msssim, ms_ssim};
use lccgen::pipeline::write_pgm_grid;
use lccgen::tensor::Tensor;

fn main() -> lccgen::Result<()> {
    let ds = synthetic_digits(200, 0)?;
    let images: Vec<Tensor> = (0..ds.len())
        .map(|i| Tensor::matrix(8, 8, ds.samples.row(i).to_vec()).unwrap())
        .collect();

    let same = ms_ssim(&images[0], &images[0], 2.0)?;
    println!("self similarity: {} (fallback window: {})", same.score, same.fallback);

    let pair = ms_ssim(&images[0], &images[1], 2.0)?;
    println!("two random glyphs: {:.4}", pair.score);

    let diversity = diversity_msssim(&images, 300, 2.0, 1)?;
    println!("mean pairwise similarity over 300 pairs: {diversity:.4}");
    println!("(identical samples would score 1.0; diverse sets score much lower)");

    let grid = Tensor::matrix(
        16,
        64,
        (0..16).flat_map(|i| ds.samples.row(i).to_vec()).collect(),
    )?;
    let path = std::env::temp_dir().join("digit_sheet.pgm");
    write_pgm_grid(&grid, 8, &path)?;
    println!("contact sheet written to {}", path.display());
    Ok(())
}
