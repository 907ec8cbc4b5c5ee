//! RMS error of MC, QMC and MLMC ratio estimators against sample size.

use bayes_ratio::config::StudyConfig;
use bayes_ratio::estimators::{Dependence, Method};
use bayes_ratio::studies::{self, Setup};

fn main() -> bayes_ratio::Result<()> {
    let mut config = StudyConfig::default();
    config.problem.modes = 20;
    config.problem.h_star = 1.0 / 32.0;
    config.discretisation.levels = 2;
    config.estimator.n_grid = vec![16, 32, 64, 128];
    config.estimator.mc_replications = 8;
    config.estimator.qmc_shifts = 8;
    config.estimator.reference_points = 1024;
    config.estimator.reference_shifts = 8;
    config.output.directory = std::env::temp_dir().join("bayes-ratio-n-study");
    let study = studies::n_study(&Setup::new(config)?)?;
    for method in [Method::Mc, Method::Qmc, Method::Mlmc] {
        for dep in [Dependence::Dependent, Dependence::Independent] {
            if let Some(fit) = study.fit(method, dep) {
                println!("{:<4} {:<11} rate {:.2}", method.name(), dep.name(), fit.slope);
            }
        }
    }
    Ok(())
}
