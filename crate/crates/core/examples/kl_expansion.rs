//! Truncated KL expansion of the log-permeability: eigenvalues, captured
//! variance, and one sampled field on a 32x32 mesh.

use bayes_ratio::fem::MeshLevel;
use bayes_ratio::randfield::{realise_field, sample_parameters, BasisOptions, CovarianceSpec, KlBasis};

fn main() -> bayes_ratio::Result<()> {
    let spec = CovarianceSpec::new(1.0, 0.3)?;
    let basis = KlBasis::build(spec, 200, 64, BasisOptions::default())?;
    println!("leading eigenvalues:");
    for (j, ev) in basis.eigenvalues().iter().take(8).enumerate() {
        println!("  mode {j:>2} {:?}: {ev:.5}", basis.mode_pair(j));
    }
    for modes in [10, 50, 200] {
        println!("captured variance at the centre with {modes:>3} modes: {:.4}", basis.mercer_partial_sum(32, 32, modes));
    }
    let mesh = MeshLevel::uniform(32)?;
    let field = realise_field(&basis, &sample_parameters(&basis, 7), &mesh)?;
    let k = field.values();
    let (lo, hi) = k.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    println!("sampled permeability on 32x32: min {lo:.3}, max {hi:.3}");
    Ok(())
}
