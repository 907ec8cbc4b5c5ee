//! Sensitivity of the ratio estimators to the noise level and the number of
//! observations.

use bayes_ratio::config::StudyConfig;
use bayes_ratio::studies::{self, Setup};

fn main() -> bayes_ratio::Result<()> {
    let mut config = StudyConfig::default();
    config.problem.modes = 20;
    config.problem.h_star = 1.0 / 32.0;
    config.discretisation.levels = 2;
    config.estimator.noise_grid = vec![0.01, 0.1, 1.0];
    config.estimator.observation_grid = vec![1, 9];
    config.estimator.robustness_samples = 64;
    config.estimator.robustness_reference_shifts = 4;
    config.estimator.screen_samples = 60;
    config.output.directory = std::env::temp_dir().join("bayes-ratio-robustness");
    let study = studies::robustness_study(&Setup::new(config)?)?;
    for row in &study.rows {
        println!(
            "{:<12} {:>6} {:<4} {:<11} rms {:.3e}",
            row.sweep,
            row.value,
            row.row.method.name(),
            row.row.dependence.name(),
            row.row.error.error_ratio
        );
    }
    Ok(())
}
