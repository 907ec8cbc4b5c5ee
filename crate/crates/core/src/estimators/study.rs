//! Level screening, cached reference values and error tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::problem::Problem;
use super::report::{Dependence, EstimatorReport};
use super::sampling::shift_seed;
use crate::error::{Error, Result};
use crate::qmc::{lattice_point_into, map_to_parameters_clamped, LatticeRule, RandomShift};
use crate::randfield::sample_parameters;
use crate::seed::{self, tag};
use crate::stats;

/// Screened moments of one level. On level 0 the differences are the plain values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelScreen {
    pub level: usize,
    pub cells: usize,
    pub samples: usize,
    pub mean_psi: f64,
    pub mean_theta: f64,
    pub var_psi: f64,
    pub var_theta: f64,
    pub cov: f64,
    pub mean_dpsi: f64,
    pub mean_dtheta: f64,
    pub var_dpsi: f64,
    pub var_dtheta: f64,
    pub cov_d: f64,
}

impl LevelScreen {
    /// Variance of the linearised level term `Y^psi - r Y^theta`; without
    /// the covariance term when numerator and denominator are independent.
    pub fn ratio_variance(&self, ratio: f64, dependence: Dependence) -> f64 {
        let cross = match dependence {
            Dependence::Dependent => 2.0 * ratio * self.cov_d,
            Dependence::Independent => 0.0,
        };
        self.var_dpsi - cross + ratio * ratio * self.var_dtheta
    }

    /// Same for the plain level-`l` sample `psi - r theta`.
    pub fn plain_ratio_variance(&self, ratio: f64, dependence: Dependence) -> f64 {
        let cross = match dependence {
            Dependence::Dependent => 2.0 * ratio * self.cov,
            Dependence::Independent => 0.0,
        };
        self.var_psi - cross + ratio * ratio * self.var_theta
    }
}

/// Samples every level `0..levels` with `samples` coupled draws each.
pub fn screen_levels(problem: &Problem, levels: usize, samples: usize, seed: u64) -> Result<Vec<LevelScreen>> {
    if levels == 0 || levels > problem.levels() || samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "screening needs 1..={} levels and >= 2 samples",
            problem.levels()
        )));
    }
    (0..levels)
        .map(|l| {
            let evals: Vec<[f64; 4]> = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    let s = seed::derive(&[seed, tag::SCREEN, l as u64, i]);
                    let xi = sample_parameters(problem.basis(), s);
                    if l == 0 {
                        let e = problem.evaluate(0, &xi)?;
                        Ok([e.psi, e.theta, e.psi, e.theta])
                    } else {
                        let (f, c) = problem.evaluate_coupled(l, &xi)?;
                        Ok([f.psi, f.theta, f.psi - c.psi, f.theta - c.theta])
                    }
                })
                .collect::<Result<_>>()?;
            let col = |k: usize| evals.iter().map(|e| e[k]).collect::<Vec<f64>>();
            let (psi, theta, dpsi, dtheta) = (col(0), col(1), col(2), col(3));
            Ok(LevelScreen {
                level: l,
                cells: problem.hierarchy().level(l).cells(),
                samples,
                mean_psi: stats::mean(&psi),
                mean_theta: stats::mean(&theta),
                var_psi: stats::sample_variance(&psi),
                var_theta: stats::sample_variance(&theta),
                cov: stats::sample_covariance(&psi, &theta),
                mean_dpsi: stats::mean(&dpsi),
                mean_dtheta: stats::mean(&dtheta),
                var_dpsi: stats::sample_variance(&dpsi),
                var_dtheta: stats::sample_variance(&dtheta),
                cov_d: stats::sample_covariance(&dpsi, &dtheta),
            })
        })
        .collect()
}

/// High-accuracy `Q_h`, `Z_h` on one level with standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub level: usize,
    pub cells: usize,
    pub q: f64,
    pub z: f64,
    pub q_stderr: f64,
    pub z_stderr: f64,
    pub ratio_stderr: f64,
    pub evaluations: u64,
}

impl Reference {
    pub fn ratio(&self) -> f64 {
        self.q / self.z
    }

    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# reference values")?;
        writeln!(out, "level = {}", self.level)?;
        writeln!(out, "cells = {}", self.cells)?;
        writeln!(out, "q = {:.16e}", self.q)?;
        writeln!(out, "z = {:.16e}", self.z)?;
        writeln!(out, "q_stderr = {:.16e}", self.q_stderr)?;
        writeln!(out, "z_stderr = {:.16e}", self.z_stderr)?;
        writeln!(out, "ratio_stderr = {:.16e}", self.ratio_stderr)?;
        writeln!(out, "evaluations = {}", self.evaluations)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingReference(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let ctx = path.display().to_string();
        let get = |key: &str| -> Result<String> {
            text.lines()
                .filter_map(|l| l.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim().to_string())
                .ok_or_else(|| Error::parse(&ctx, format!("missing key {key}")))
        };
        let num = |s: String| -> Result<f64> { s.parse().map_err(|e| Error::parse(&ctx, format!("{e}"))) };
        let int = |s: String| -> Result<u64> { s.parse().map_err(|e| Error::parse(&ctx, format!("{e}"))) };
        Ok(Reference {
            level: int(get("level")?)? as usize,
            cells: int(get("cells")?)? as usize,
            q: num(get("q")?)?,
            z: num(get("z")?)?,
            q_stderr: num(get("q_stderr")?)?,
            z_stderr: num(get("z_stderr")?)?,
            ratio_stderr: num(get("ratio_stderr")?)?,
            evaluations: int(get("evaluations")?)?,
        })
    }
}

/// Reference by randomly shifted lattice rule with many independent shifts.
pub fn qmc_reference(problem: &Problem, level: usize, rule: &LatticeRule, shifts: usize, seed: u64) -> Result<Reference> {
    let dim = problem.basis().len();
    let rule = rule.truncated(dim)?;
    let prior = problem.basis().prior();
    let mut qs = Vec::with_capacity(shifts);
    let mut zs = Vec::with_capacity(shifts);
    for r in 0..shifts as u64 {
        let shift = RandomShift::draw(shift_seed(seed ^ tag::REFERENCE, r, tag::SHARED), dim);
        let evals: Vec<(f64, f64)> = (1..=rule.points())
            .into_par_iter()
            .map(|i| {
                let mut x = vec![0.0; dim];
                lattice_point_into(&rule, &shift, i, &mut x);
                let e = problem.evaluate(level, &map_to_parameters_clamped(&x, prior))?;
                Ok((e.psi, e.theta))
            })
            .collect::<Result<_>>()?;
        qs.push(stats::mean(&evals.iter().map(|e| e.0).collect::<Vec<_>>()));
        zs.push(stats::mean(&evals.iter().map(|e| e.1).collect::<Vec<_>>()));
    }
    Ok(reference_from_replicates(problem, level, &qs, &zs, rule.points() * shifts as u64))
}

/// Reference by plain Monte Carlo (used where no lattice is available).
pub fn mc_reference(problem: &Problem, level: usize, samples: usize, seed: u64) -> Result<Reference> {
    let evals: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed::derive(&[seed, tag::REFERENCE, level as u64, i]);
            let e = problem.evaluate(level, &sample_parameters(problem.basis(), s))?;
            Ok((e.psi, e.theta))
        })
        .collect::<Result<_>>()?;
    let q: Vec<f64> = evals.iter().map(|e| e.0).collect();
    let z: Vec<f64> = evals.iter().map(|e| e.1).collect();
    Ok(reference_from_replicates(problem, level, &q, &z, samples as u64))
}

fn reference_from_replicates(problem: &Problem, level: usize, q: &[f64], z: &[f64], evaluations: u64) -> Reference {
    let n = q.len() as f64;
    let (qm, zm) = (stats::mean(q), stats::mean(z));
    let r = qm / zm;
    let lin: Vec<f64> = q.iter().zip(z).map(|(a, b)| (a - r * b) / zm).collect();
    Reference {
        level,
        cells: problem.hierarchy().level(level).cells(),
        q: qm,
        z: zm,
        q_stderr: (stats::sample_variance(q) / n).sqrt(),
        z_stderr: (stats::sample_variance(z) / n).sqrt(),
        ratio_stderr: (stats::sample_variance(&lin) / n).sqrt(),
        evaluations,
    }
}

/// One row of a sampling-error table.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub grid_value: f64,
    pub error_ratio: f64,
    pub error_q: f64,
    pub error_z: f64,
    pub cost_units: f64,
    pub walltime_s: f64,
    pub replications: usize,
    pub nonpositive_denominators: usize,
    pub ratio_bound_violations: usize,
}

impl ErrorRow {
    pub fn from_report(grid_value: f64, report: &EstimatorReport, reference: &Reference) -> Self {
        ErrorRow {
            grid_value,
            error_ratio: stats::rms_error(&report.ratios(), reference.ratio()),
            error_q: stats::rms_error(&report.q_values(), reference.q),
            error_z: stats::rms_error(&report.z_values(), reference.z),
            cost_units: report.cost_units(),
            walltime_s: report.walltime_s,
            replications: report.replications.len(),
            nonpositive_denominators: report.nonpositive_denominators(),
            ratio_bound_violations: report.ratio_bound_violations(),
        }
    }
}

/// Runs `run` for every grid value and measures root-mean-square errors
/// against `reference`.
pub fn ratio_mse_study<F>(grid: &[f64], reference: &Reference, mut run: F) -> Result<Vec<ErrorRow>>
where
    F: FnMut(f64) -> Result<EstimatorReport>,
{
    grid.iter()
        .map(|&g| Ok(ErrorRow::from_report(g, &run(g)?, reference)))
        .collect()
}
