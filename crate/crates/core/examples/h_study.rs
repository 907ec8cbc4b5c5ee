//! Discretisation error of the ratio against mesh width on a small problem.

use bayes_ratio::config::StudyConfig;
use bayes_ratio::studies::{self, Setup};

fn main() -> bayes_ratio::Result<()> {
    let mut config = StudyConfig::default();
    config.problem.modes = 40;
    config.estimator.h_grid = vec![0.125, 0.0625];
    config.estimator.h_study_points = 256;
    config.output.directory = std::env::temp_dir().join("bayes-ratio-h-study");
    let study = studies::h_study(&Setup::new(config)?)?;
    for row in &study.rows {
        println!("h = 1/{:<3} ratio {:.5}  |dR| {:.3e}", row.cells, row.ratio, row.diff_ratio);
    }
    println!("fitted rate in h: {:.2}", study.fit.slope);
    Ok(())
}
