//! Ratio estimators of the posterior expectation `Q_h / Z_h`.

mod allocate;
mod problem;
mod report;
mod sampling;
mod study;

pub use allocate::{allocate_for_budget, allocate_for_tolerance, allocate_levels, mlmc_cost, MIN_SAMPLES};
pub use problem::{restrict, CostMeter, Problem, ProblemOptions, Quantity, SampleEval};
pub use report::{Dependence, EstimatorReport, LevelStat, Method, Replication, SamplePlan};
pub use sampling::{mc_estimate, mlmc_estimate, qmc_estimate, self_normalised, shift_seed, shifted_lattice_means};
pub use study::{
    mc_reference, qmc_reference, ratio_mse_study, screen_levels, ErrorRow, LevelScreen, Reference,
};
