//! Predicted cost to reach a tolerance for each method, built from an h-study
//! and an n-study run first on the same configuration.

use bayes_ratio::config::StudyConfig;
use bayes_ratio::estimators::{Dependence, Method};
use bayes_ratio::studies::{self, Setup};

fn main() -> bayes_ratio::Result<()> {
    let mut config = StudyConfig::default();
    config.problem.modes = 20;
    config.problem.h_star = 1.0 / 32.0;
    config.discretisation.levels = 2;
    config.estimator.h_grid = vec![0.125, 0.0625];
    config.estimator.h_study_points = 128;
    config.estimator.n_grid = vec![16, 32, 64];
    config.estimator.mc_replications = 8;
    config.estimator.qmc_shifts = 8;
    config.estimator.reference_points = 512;
    config.estimator.reference_shifts = 8;
    config.estimator.screen_samples = 60;
    config.estimator.epsilon_exponents = vec![3, 4, 5];
    config.output.directory = std::env::temp_dir().join("bayes-ratio-cost-study");
    let setup = Setup::new(config)?;
    studies::h_study(&setup)?;
    studies::n_study(&setup)?;
    let study = studies::cost_study(&setup)?;
    for row in study.rows.iter().filter(|r| r.dependence == Dependence::Dependent) {
        println!(
            "eps {:.3e} {:<4} h = 1/{:<3} samples {:?} cost {:.3e}",
            row.epsilon,
            row.method.name(),
            (1.0 / row.h).round(),
            row.samples,
            row.cost_units
        );
    }
    for method in [Method::Mc, Method::Qmc, Method::Mlmc] {
        if let Some(fit) = study.fit(method, Dependence::Dependent) {
            println!("{:<4} cost ~ eps^{:.2}", method.name(), fit.slope);
        }
    }
    Ok(())
}
