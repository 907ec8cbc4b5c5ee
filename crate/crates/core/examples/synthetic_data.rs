//! Synthetic observations from a hidden truth and the likelihood they induce.

use bayes_ratio::bayes::generate_data;
use bayes_ratio::randfield::{BasisOptions, CovarianceSpec, KlBasis};

fn main() -> bayes_ratio::Result<()> {
    let basis = KlBasis::build(CovarianceSpec::new(1.0, 0.3)?, 100, 64, BasisOptions::default())?;
    let data = generate_data(1, &basis, 64, 9, 0.09, 2, 1e-12)?;
    println!("{:>8} {:>8} {:>10} {:>10}", "x1", "x2", "noiseless", "observed");
    for (i, x) in data.layout.coords().iter().enumerate() {
        println!("{:>8.4} {:>8.4} {:>10.5} {:>10.5}", x[0], x[1], data.noiseless[i], data.y[i]);
    }
    let sharper = data.with_noise_variance(0.01)?;
    println!("same standardised noise at sigma^2 = 0.01: y[0] = {:.5}", sharper.y[0]);
    Ok(())
}
