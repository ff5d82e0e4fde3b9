//! Fit a generator to a calibration sample and test four p-values against
//! the calibrated local level. Run with `cargo run --example quickstart`.

use archcal::generator::fit_generator_gnz;
use archcal::mtp::{calibrate, decide};
use archcal::rng::Seed;
use archcal::sampling::sample_gumbel;

fn main() -> archcal::Result<()> {
    // Calibration sample: 200 draws of a 4-variate statistic vector.
    let stats = sample_gumbel(200, 4, 2.0, Seed(1))?;
    let (generator, diagnostics) = fit_generator_gnz(&stats)?;
    let alpha_loc = calibrate(&generator, 4, 0.05)?;
    let rejections = decide(&[0.001, 0.2, 0.03, 0.6], alpha_loc)?;
    println!("alpha_loc = {alpha_loc}, rejections = {rejections:?}, {diagnostics:?}");
    Ok(())
}
