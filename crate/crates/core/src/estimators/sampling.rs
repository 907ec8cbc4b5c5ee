//! Monte Carlo, randomly shifted lattice and multilevel estimators of `Q_h`,
//! `Z_h` and their ratio.
//!
//! Every sample draws its coefficients from a stream addressed by
//! `(seed, method, level, replication, stream, index)`; samples of a
//! replication are evaluated in parallel and reduced by pairwise summation in
//! index order, so results do not depend on the thread count.

use std::time::Instant;

use rayon::prelude::*;

use super::problem::{Problem, SampleEval};
use super::report::{Dependence, EstimatorReport, LevelStat, Method, Replication, SamplePlan};
use crate::error::{Error, Result};
use crate::qmc::{lattice_point_into, map_to_parameters_clamped, LatticeRule, RandomShift};
use crate::randfield::sample_parameters;
use crate::seed::{self, tag};
use crate::stats;

fn check_plan(plan: &SamplePlan, method: Method) -> Result<()> {
    if plan.method != method {
        return Err(Error::InvalidParameter(format!(
            "plan is for {:?}, estimator is {:?}",
            plan.method, method
        )));
    }
    if plan.replications == 0 || plan.samples.is_empty() || plan.samples.iter().any(|&n| n == 0) {
        return Err(Error::InvalidParameter(
            "sample counts and replications must be >= 1".into(),
        ));
    }
    Ok(())
}

fn streams(dependence: Dependence) -> &'static [u64] {
    match dependence {
        Dependence::Dependent => &[tag::SHARED],
        Dependence::Independent => &[tag::NUMERATOR, tag::DENOMINATOR],
    }
}

fn mc_samples(problem: &Problem, level: usize, n: usize, path: [u64; 5]) -> Result<Vec<SampleEval>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed::derive(&[path[0], path[1], path[2], path[3], path[4], i]);
            problem.evaluate(level, &sample_parameters(problem.basis(), s))
        })
        .collect()
}

fn finish(q_samples: &[SampleEval], z_samples: &[SampleEval], dependent: bool, cost_units: f64) -> Replication {
    let psi: Vec<f64> = q_samples.iter().map(|s| s.psi).collect();
    let theta: Vec<f64> = z_samples.iter().map(|s| s.theta).collect();
    let q = stats::mean(&psi);
    let z = stats::mean(&theta);
    let max_abs_phi = q_samples.iter().map(|s| s.phi.abs()).fold(0.0, f64::max);
    let ratio = if dependent { self_normalised(q_samples) } else { q / z };
    Replication {
        q,
        z,
        ratio,
        max_abs_phi,
        nonpositive_denominator: !(z > 0.0),
        cost_units,
        levels: Vec::new(),
    }
}

/// `sum theta_i phi_i / sum theta_i` with weights `exp(-(Phi_i - min Phi))`,
/// which cannot underflow, kept inside `[min phi, max phi]` against rounding.
pub fn self_normalised(samples: &[SampleEval]) -> f64 {
    let shift = samples.iter().map(|s| s.misfit).fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = samples.iter().map(|s| (shift - s.misfit).exp()).collect();
    let wphi: Vec<f64> = samples.iter().zip(&w).map(|(s, w)| w * s.phi).collect();
    let lo = samples.iter().map(|s| s.phi).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.phi).fold(f64::NEG_INFINITY, f64::max);
    (stats::pairwise_sum(&wphi) / stats::pairwise_sum(&w)).clamp(lo, hi)
}

/// Plain Monte Carlo on mesh level `plan.level`.
pub fn mc_estimate(plan: &SamplePlan, problem: &Problem) -> Result<EstimatorReport> {
    check_plan(plan, Method::Mc)?;
    let start = Instant::now();
    let n = plan.samples[0];
    let level = plan.level;
    let per_solve = problem.level_cost(level);
    let mut replications = Vec::with_capacity(plan.replications);
    for r in 0..plan.replications as u64 {
        let sets = streams(plan.dependence)
            .iter()
            .map(|&s| mc_samples(problem, level, n, [plan.seed, tag::MC, level as u64, r, s]))
            .collect::<Result<Vec<_>>>()?;
        let cost = (n * sets.len()) as f64 * per_solve;
        replications.push(finish(&sets[0], sets.last().unwrap(), sets.len() == 1, cost));
    }
    Ok(EstimatorReport {
        method: Method::Mc,
        dependence: plan.dependence,
        samples: plan.samples.clone(),
        replications,
        walltime_s: start.elapsed().as_secs_f64(),
    })
}

/// Seed of the random shift for one replication and stream.
pub fn shift_seed(study_seed: u64, replication: u64, stream: u64) -> u64 {
    seed::derive(&[study_seed, tag::QMC, replication, stream])
}

/// Per-shift lattice averages of an arbitrary integrand on `[0,1)^s`.
pub fn shifted_lattice_means<F>(rule: &LatticeRule, shifts: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    (0..shifts as u64)
        .map(|r| {
            let shift = RandomShift::draw(shift_seed(seed, r, tag::SHARED), rule.dimension());
            let vals: Vec<f64> = (1..=rule.points())
                .into_par_iter()
                .map(|i| {
                    let mut x = vec![0.0; rule.dimension()];
                    lattice_point_into(rule, &shift, i, &mut x);
                    f(&x)
                })
                .collect();
            stats::mean(&vals)
        })
        .collect()
}

fn qmc_samples(problem: &Problem, level: usize, rule: &LatticeRule, shift: &RandomShift) -> Result<Vec<SampleEval>> {
    let prior = problem.basis().prior();
    (1..=rule.points())
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; rule.dimension()];
            lattice_point_into(rule, shift, i, &mut x);
            problem.evaluate(level, &map_to_parameters_clamped(&x, prior))
        })
        .collect()
}

/// Randomly shifted lattice rule; `plan.replications` independent shifts.
/// `plan.samples[0]` must equal the rule's point count.
pub fn qmc_estimate(plan: &SamplePlan, problem: &Problem, rule: &LatticeRule) -> Result<EstimatorReport> {
    check_plan(plan, Method::Qmc)?;
    let dim = problem.basis().len();
    if rule.dimension() < dim {
        return Err(Error::ShortGeneratingVector {
            found: rule.dimension(),
            needed: dim,
        });
    }
    if plan.samples[0] as u64 != rule.points() {
        return Err(Error::InvalidParameter(format!(
            "plan asks for {} points, lattice has {}",
            plan.samples[0],
            rule.points()
        )));
    }
    let rule = rule.truncated(dim)?;
    let start = Instant::now();
    let level = plan.level;
    let per_solve = problem.level_cost(level);
    let mut replications = Vec::with_capacity(plan.replications);
    for r in 0..plan.replications as u64 {
        let sets = streams(plan.dependence)
            .iter()
            .map(|&s| {
                let shift = RandomShift::draw(shift_seed(plan.seed, r, s), dim);
                qmc_samples(problem, level, &rule, &shift)
            })
            .collect::<Result<Vec<_>>>()?;
        let cost = (rule.points() as usize * sets.len()) as f64 * per_solve;
        replications.push(finish(&sets[0], sets.last().unwrap(), sets.len() == 1, cost));
    }
    Ok(EstimatorReport {
        method: Method::Qmc,
        dependence: plan.dependence,
        samples: plan.samples.clone(),
        replications,
        walltime_s: start.elapsed().as_secs_f64(),
    })
}

/// Level term samples: `(psi, theta)` of `Y_l = X_l - X_{l-1}` (plain `X_0` on level 0).
fn level_terms(problem: &Problem, level: usize, n: usize, path: [u64; 5]) -> Result<Vec<(f64, f64)>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed::derive(&[path[0], path[1], path[2], path[3], path[4], i]);
            let xi = sample_parameters(problem.basis(), s);
            if level == 0 {
                let e = problem.evaluate(0, &xi)?;
                Ok((e.psi, e.theta))
            } else {
                let (fine, coarse) = problem.evaluate_coupled(level, &xi)?;
                Ok((fine.psi - coarse.psi, fine.theta - coarse.theta))
            }
        })
        .collect()
}

/// Multilevel Monte Carlo over levels `0..plan.samples.len()` of the problem hierarchy.
pub fn mlmc_estimate(plan: &SamplePlan, problem: &Problem) -> Result<EstimatorReport> {
    check_plan(plan, Method::Mlmc)?;
    if plan.samples.len() > problem.levels() {
        return Err(Error::InvalidParameter(format!(
            "plan has {} levels, hierarchy only {}",
            plan.samples.len(),
            problem.levels()
        )));
    }
    let start = Instant::now();
    let per_sample_cost: Vec<f64> = (0..plan.samples.len())
        .map(|l| {
            problem.level_cost(l) + if l > 0 { problem.level_cost(l - 1) } else { 0.0 }
        })
        .collect();
    let stream_ids = streams(plan.dependence);
    let mut replications = Vec::with_capacity(plan.replications);
    for r in 0..plan.replications as u64 {
        let mut q = 0.0;
        let mut z = 0.0;
        let mut cost = 0.0;
        let mut levels = Vec::with_capacity(plan.samples.len());
        for (l, &n) in plan.samples.iter().enumerate() {
            let sets = stream_ids
                .iter()
                .map(|&s| level_terms(problem, l, n, [plan.seed, tag::MLMC, l as u64, r, s]))
                .collect::<Result<Vec<_>>>()?;
            let psi: Vec<f64> = sets[0].iter().map(|t| t.0).collect();
            let theta: Vec<f64> = sets.last().unwrap().iter().map(|t| t.1).collect();
            let stat = LevelStat {
                samples: n,
                mean_psi: stats::mean(&psi),
                mean_theta: stats::mean(&theta),
                var_psi: stats::sample_variance(&psi),
                var_theta: stats::sample_variance(&theta),
            };
            q += stat.mean_psi;
            z += stat.mean_theta;
            cost += (n * sets.len()) as f64 * per_sample_cost[l];
            levels.push(stat);
        }
        let nonpositive = !(z > 0.0);
        if nonpositive {
            log::warn!("MLMC replication {r}: denominator nonpositive ({z:e})");
        }
        replications.push(Replication {
            q,
            z,
            ratio: q / z,
            max_abs_phi: f64::INFINITY,
            nonpositive_denominator: nonpositive,
            cost_units: cost,
            levels,
        });
    }
    Ok(EstimatorReport {
        method: Method::Mlmc,
        dependence: plan.dependence,
        samples: plan.samples.clone(),
        replications,
        walltime_s: start.elapsed().as_secs_f64(),
    })
}
