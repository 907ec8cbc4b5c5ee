//! MC, QMC and MLMC estimates of the posterior mean outflow, with dependent
//! and independent numerator/denominator samples.

use std::sync::Arc;

use bayes_ratio::bayes::generate_data;
use bayes_ratio::estimators::{mc_estimate, mlmc_estimate, qmc_estimate, Dependence, Method, Problem, ProblemOptions, SamplePlan};
use bayes_ratio::fem::build_mesh_hierarchy;
use bayes_ratio::qmc::{cbc_construct, WeightSpec};
use bayes_ratio::randfield::{BasisOptions, CovarianceSpec, KlBasis};

fn main() -> bayes_ratio::Result<()> {
    let modes = 50;
    let basis = Arc::new(KlBasis::build(CovarianceSpec::new(1.0, 0.3)?, modes, 32, BasisOptions::default())?);
    let data = generate_data(1, &basis, 32, 9, 0.09, 2, 1e-12)?;
    let problem = Problem::new(basis, build_mesh_hierarchy(0.125, 2)?, data, ProblemOptions::default())?;
    let rule = cbc_construct(256, modes, &WeightSpec::default())?;
    for dependence in [Dependence::Dependent, Dependence::Independent] {
        let mc = mc_estimate(&SamplePlan::single_level(Method::Mc, 256, 2, 8, 1).with_dependence(dependence), &problem)?;
        let qmc = qmc_estimate(&SamplePlan::single_level(Method::Qmc, 256, 2, 8, 1).with_dependence(dependence), &problem, &rule)?;
        let ml = mlmc_estimate(&SamplePlan::multilevel(vec![400, 100, 25], 8, 1).with_dependence(dependence), &problem)?;
        for report in [&mc, &qmc, &ml] {
            println!(
                "{:<4} {:<11} ratio {:.5} (sd {:.1e}), cost {:.3e}",
                report.method.name(),
                dependence.name(),
                report.mean_ratio(),
                report.ratio_variance().sqrt(),
                report.cost_units()
            );
        }
    }
    Ok(())
}
