//! Component-by-component construction of rank-1 lattice rules and their
//! worst-case errors.

use bayes_ratio::qmc::{cbc_construct, worst_case_error_sq, WeightSpec};

fn main() -> bayes_ratio::Result<()> {
    let weights = WeightSpec::default();
    let dim = 20;
    for n in [64u64, 256, 1024, 4096] {
        let rule = cbc_construct(n, dim, &weights)?;
        let z = rule.generating_vector();
        println!(
            "N = {n:>5}: e = {:.3e}, z[..6] = {:?}",
            worst_case_error_sq(&rule, &weights).sqrt(),
            &z[..6]
        );
    }
    Ok(())
}
