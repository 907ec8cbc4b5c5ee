//! Experiment drivers. Each writes a CSV with a `#` metadata header (version,
//! configuration hash, seeds and the configuration) into the output
//! directory, plus a `*_timing.csv` with wall-clock times. Study CSVs contain
//! no timing and are byte-identical across reruns and thread counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bayes::{generate_data, ObservationSet};
use crate::config::StudyConfig;
use crate::error::{Error, Result};
use crate::estimators::{
    allocate_for_budget, allocate_for_tolerance, mc_estimate, mlmc_cost, mlmc_estimate,
    qmc_estimate, qmc_reference, screen_levels, Dependence, ErrorRow, EstimatorReport,
    LevelScreen, Method, Problem, ProblemOptions, Quantity, Reference, SamplePlan,
};
use crate::fem::{build_mesh_hierarchy, cells_for_width};
use crate::qmc::{
    cbc_construct, lattice_point, load_generating_vector, map_to_parameters_clamped, LatticeRule,
    RandomShift,
};
use crate::randfield::{BasisOptions, KlBasis};
use crate::seed::{self, tag};
use crate::stats::{self, loglog_fit, LogLogFit};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shared inputs of every study: configuration, KL basis and data.
pub struct Setup {
    pub config: StudyConfig,
    pub basis: Arc<KlBasis>,
    pub data: ObservationSet,
}

impl Setup {
    /// Builds the basis on the reference mesh and loads the data file when it
    /// matches the configuration, regenerating it in memory otherwise.
    pub fn new(config: StudyConfig) -> Result<Self> {
        config.validate()?;
        let basis = Arc::new(build_basis(&config)?);
        let path = config.path(&config.output.data);
        let p = &config.problem;
        let data = match ObservationSet::load(&path) {
            Ok(d)
                if d.m() == p.observations
                    && d.noise_variance == p.noise_variance
                    && d.truth_seed == p.truth_seed
                    && d.noise_seed == p.noise_seed
                    && d.layout.reference_cells == config.reference_cells()? =>
            {
                d
            }
            _ => {
                log::info!("no matching data file at {}; generating in memory", path.display());
                data_for(&config, &basis, p.observations)?
            }
        };
        Ok(Setup { config, basis, data })
    }

    pub fn options(&self) -> ProblemOptions {
        ProblemOptions {
            solver_tol: self.config.discretisation.solver_tol,
            quantity: Quantity::Outflow,
            frozen_coefficient: self.config.discretisation.frozen_coefficient,
        }
    }

    /// Problem on the hierarchy `h0, h0/2, .., h0/2^levels`.
    pub fn problem(&self, h0: f64, levels: usize, data: ObservationSet) -> Result<Problem> {
        Problem::new(
            Arc::clone(&self.basis),
            build_mesh_hierarchy(h0, levels)?,
            data,
            self.options(),
        )
    }

    /// The MLMC hierarchy of the configuration.
    pub fn full_problem(&self) -> Result<Problem> {
        let d = &self.config.discretisation;
        self.problem(d.h0, d.levels, self.data.clone())
    }

    /// Hierarchy from `h0` down to `h`.
    pub fn problem_to(&self, h: f64, data: ObservationSet) -> Result<Problem> {
        let h0 = self.config.discretisation.h0;
        let levels = refinements(h0, h)?;
        self.problem(h0, levels, data)
    }
}

pub fn build_basis(config: &StudyConfig) -> Result<KlBasis> {
    let p = &config.problem;
    KlBasis::build(
        config.covariance(),
        p.modes,
        config.reference_cells()?,
        BasisOptions {
            prior: p.prior,
            mean: p.mean,
            k_star: p.k_star,
        },
    )
}

fn data_for(config: &StudyConfig, basis: &KlBasis, m: usize) -> Result<ObservationSet> {
    let p = &config.problem;
    generate_data(
        p.truth_seed,
        basis,
        config.reference_cells()?,
        m,
        p.noise_variance,
        p.noise_seed,
        config.discretisation.solver_tol,
    )
}

/// Number of halvings from `h0` to `h`.
fn refinements(h0: f64, h: f64) -> Result<usize> {
    let (c0, c) = (cells_for_width(h0)?, cells_for_width(h)?);
    if c < c0 || c % c0 != 0 || !(c / c0).is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "width 1/{c} is not a dyadic refinement of h0 = 1/{c0}"
        )));
    }
    Ok((c / c0).trailing_zeros() as usize)
}

/// Lattice rule with `n` points in `dim` dimensions: the configured
/// generating vector file, or a CBC construction.
pub fn lattice_for(config: &StudyConfig, n: u64, dim: usize) -> Result<LatticeRule> {
    match &config.estimator.lattice_file {
        Some(path) => load_generating_vector(path, n, dim),
        None => cbc_construct(n, dim, &config.estimator.weights),
    }
}

/// CSV with a metadata header; rows are appended with [`Table::row`].
#[derive(Clone, Debug)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(study: &str, config: &StudyConfig, columns: &[&str]) -> Self {
        let mut text = String::new();
        let e = &config.estimator;
        let p = &config.problem;
        writeln!(text, "# bayes-ratio {VERSION} {study}").unwrap();
        writeln!(text, "# config_hash = {}", config.hash()).unwrap();
        writeln!(
            text,
            "# seeds: estimator = {}, truth = {}, noise = {}",
            e.seed, p.truth_seed, p.noise_seed
        )
        .unwrap();
        writeln!(text, "# config:").unwrap();
        for line in config.canonical_toml().lines() {
            writeln!(text, "#   {line}").unwrap();
        }
        writeln!(text, "{}", columns.join(",")).unwrap();
        Table { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        writeln!(self.text, "{}", fields.join(",")).unwrap();
    }

    pub fn comment(&mut self, line: &str) {
        writeln!(self.text, "# {line}").unwrap();
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, &self.text)?;
        Ok(())
    }
}

fn f(v: f64) -> String {
    format!("{v:e}")
}

fn timing_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("study");
    csv.with_file_name(format!("{stem}_timing.csv"))
}

fn save_timing(csv: &Path, rows: &[(String, f64)]) -> Result<()> {
    let mut text = String::from("item,walltime_s\n");
    for (k, t) in rows {
        writeln!(text, "{k},{t}").unwrap();
    }
    fs::write(timing_path(csv), text)?;
    Ok(())
}

fn fit_line(label: &str, fit: &LogLogFit) -> String {
    format!(
        "fit {label}: slope = {:e}, slope_stderr = {:e}, intercept = {:e}",
        fit.slope, fit.slope_stderr, fit.intercept
    )
}

// ---------------------------------------------------------------- data ----

/// Writes the observation file; refuses to overwrite unless `force`.
pub fn cmd_generate_data(config: &StudyConfig, force: bool) -> Result<PathBuf> {
    config.validate()?;
    let path = config.path(&config.output.data);
    if path.exists() && !force {
        return Err(Error::FileExists(path));
    }
    let basis = build_basis(config)?;
    let data = data_for(config, &basis, config.problem.observations)?;
    fs::create_dir_all(&config.output.directory)?;
    data.save(&path)?;
    Ok(path)
}

pub fn cmd_kl_cache(config: &StudyConfig) -> Result<PathBuf> {
    config.validate()?;
    let basis = build_basis(config)?;
    fs::create_dir_all(&config.output.directory)?;
    let path = config.path(&config.output.kl_cache);
    basis.write_cache(&path)?;
    Ok(path)
}

pub fn cmd_cbc_build(config: &StudyConfig, n: u64, dim: usize) -> Result<PathBuf> {
    config.validate()?;
    let rule = cbc_construct(n, dim, &config.estimator.weights)?;
    fs::create_dir_all(&config.output.directory)?;
    let path = config.path(&config.output.lattice);
    rule.save(&path)?;
    Ok(path)
}

// ------------------------------------------------------------- h-study ----

#[derive(Clone, Debug, PartialEq)]
pub struct HRow {
    pub h: f64,
    pub cells: usize,
    pub q: f64,
    pub z: f64,
    pub ratio: f64,
    pub diff_q: f64,
    pub diff_z: f64,
    pub diff_ratio: f64,
    pub diff_ratio_stderr: f64,
}

#[derive(Clone, Debug)]
pub struct HStudy {
    pub rows: Vec<HRow>,
    pub fit: LogLogFit,
    pub table: Table,
}

/// `Q_h`, `Z_h` on every width of the grid and on `2h`, from common randomly
/// shifted lattice points, and the differences `|. _h - . _2h|`.
pub fn h_study(setup: &Setup) -> Result<HStudy> {
    let cfg = &setup.config;
    let e = &cfg.estimator;
    if e.h_grid.len() < 2 {
        return Err(Error::InvalidParameter("h-study needs at least two widths".into()));
    }
    let h_min = e.h_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let h_max = e.h_grid.iter().copied().fold(0.0, f64::max);
    let coarse = 2.0 * h_max;
    let levels = refinements(coarse, h_min)?;
    let hierarchy = build_mesh_hierarchy(coarse, levels)?;
    let problem = Problem::new(Arc::clone(&setup.basis), hierarchy.clone(), setup.data.clone(), setup.options())?;
    let dim = setup.basis.len();
    let rule = lattice_for(cfg, e.h_study_points, dim)?;
    let start = Instant::now();
    let nl = hierarchy.len();
    // per shift, per level: (Q, Z)
    let mut per_shift: Vec<Vec<(f64, f64)>> = Vec::with_capacity(e.h_study_shifts);
    for r in 0..e.h_study_shifts as u64 {
        let shift = RandomShift::draw(seed::derive(&[e.seed, tag::QMC, 0x4853, r]), dim);
        let evals: Vec<Vec<(f64, f64)>> = (1..=rule.points())
            .into_par_iter()
            .map(|i| {
                let x = lattice_point(&rule, &shift, i);
                let xi = map_to_parameters_clamped(&x, problem.basis().prior());
                (0..nl)
                    .map(|l| problem.evaluate(l, &xi).map(|s| (s.psi, s.theta)))
                    .collect()
            })
            .collect::<Result<_>>()?;
        per_shift.push(
            (0..nl)
                .map(|l| {
                    let q: Vec<f64> = evals.iter().map(|v| v[l].0).collect();
                    let z: Vec<f64> = evals.iter().map(|v| v[l].1).collect();
                    (stats::mean(&q), stats::mean(&z))
                })
                .collect(),
        );
    }
    let level_mean = |l: usize| -> (f64, f64) {
        let q: Vec<f64> = per_shift.iter().map(|s| s[l].0).collect();
        let z: Vec<f64> = per_shift.iter().map(|s| s[l].1).collect();
        (stats::mean(&q), stats::mean(&z))
    };
    let mut table = Table::new(
        "h-study",
        cfg,
        &["h", "cells", "q_h", "z_h", "ratio_h", "diff_q", "diff_z", "diff_ratio", "diff_ratio_stderr"],
    );
    let mut rows = Vec::new();
    for l in 1..nl {
        let h = hierarchy.level(l).h();
        if !e.h_grid.iter().any(|g| (g - h).abs() < 1e-12 * h) {
            continue;
        }
        let (q, z) = level_mean(l);
        let (q2, z2) = level_mean(l - 1);
        let shift_diffs: Vec<f64> = per_shift
            .iter()
            .map(|s| s[l].0 / s[l].1 - s[l - 1].0 / s[l - 1].1)
            .collect();
        let row = HRow {
            h,
            cells: hierarchy.level(l).cells(),
            q,
            z,
            ratio: q / z,
            diff_q: (q - q2).abs(),
            diff_z: (z - z2).abs(),
            diff_ratio: (q / z - q2 / z2).abs(),
            diff_ratio_stderr: (stats::sample_variance(&shift_diffs) / shift_diffs.len() as f64).sqrt(),
        };
        table.row(&[
            f(row.h),
            row.cells.to_string(),
            f(row.q),
            f(row.z),
            f(row.ratio),
            f(row.diff_q),
            f(row.diff_z),
            f(row.diff_ratio),
            f(row.diff_ratio_stderr),
        ]);
        rows.push(row);
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let ds: Vec<f64> = rows.iter().map(|r| r.diff_ratio.max(f64::MIN_POSITIVE)).collect();
    let fit = loglog_fit(&hs, &ds);
    table.comment(&fit_line("diff_ratio vs h", &fit));
    let path = cfg.path(&cfg.output.h_study);
    table.save(&path)?;
    save_timing(&path, &[("h-study".into(), start.elapsed().as_secs_f64())])?;
    Ok(HStudy { rows, fit, table })
}

// ------------------------------------------------------------ screening ----

/// Level screening on the full hierarchy; also written as CSV.
pub fn screening(setup: &Setup) -> Result<(Vec<LevelScreen>, Table)> {
    let cfg = &setup.config;
    let problem = setup.full_problem()?;
    let start = Instant::now();
    let screens = screen_levels(&problem, problem.levels(), cfg.estimator.screen_samples, cfg.estimator.seed)?;
    let ratio = screens.last().map(|s| s.mean_psi / s.mean_theta).unwrap_or(f64::NAN);
    let mut table = Table::new(
        "screening",
        cfg,
        &[
            "level", "cells", "h", "samples", "mean_psi", "mean_theta", "var_psi", "var_theta", "cov",
            "mean_dpsi", "mean_dtheta", "var_dpsi", "var_dtheta", "cov_d", "ratio_var_dependent",
            "ratio_var_independent",
        ],
    );
    for s in &screens {
        table.row(&[
            s.level.to_string(),
            s.cells.to_string(),
            f(1.0 / s.cells as f64),
            s.samples.to_string(),
            f(s.mean_psi),
            f(s.mean_theta),
            f(s.var_psi),
            f(s.var_theta),
            f(s.cov),
            f(s.mean_dpsi),
            f(s.mean_dtheta),
            f(s.var_dpsi),
            f(s.var_dtheta),
            f(s.cov_d),
            f(s.ratio_variance(ratio, Dependence::Dependent)),
            f(s.ratio_variance(ratio, Dependence::Independent)),
        ]);
    }
    if screens.len() > 2 {
        let h: Vec<f64> = screens[1..].iter().map(|s| 1.0 / s.cells as f64).collect();
        let v: Vec<f64> = screens[1..].iter().map(|s| s.var_dpsi.max(f64::MIN_POSITIVE)).collect();
        table.comment(&fit_line("var_dpsi vs h (levels >= 1)", &loglog_fit(&h, &v)));
    }
    let path = cfg.path(&cfg.output.screening);
    table.save(&path)?;
    save_timing(&path, &[("screening".into(), start.elapsed().as_secs_f64())])?;
    Ok((screens, table))
}

// ------------------------------------------------------------- n-study ----

fn reference_fingerprint(cfg: &StudyConfig, h: f64, data: &ObservationSet, shifts: usize) -> String {
    let mut hasher = Sha256::new();
    hasher.update(toml::to_string(&cfg.problem).unwrap().as_bytes());
    hasher.update(toml::to_string(&cfg.discretisation).unwrap().as_bytes());
    let e = &cfg.estimator;
    let key = format!(
        "{h:e} {} {shifts} {} {:?} {:?} {} {:e}",
        e.reference_points, e.seed, e.lattice_file, e.weights, data.m(), data.noise_variance
    );
    hasher.update(key.as_bytes());
    for y in &data.y {
        hasher.update(y.to_le_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Loads the cached reference for this configuration, or computes and
/// caches it.
pub fn reference_for(setup: &Setup, problem: &Problem, path: &Path, shifts: usize) -> Result<Reference> {
    let cfg = &setup.config;
    let level = problem.levels() - 1;
    let h = problem.hierarchy().level(level).h();
    let fingerprint = reference_fingerprint(cfg, h, problem.data(), shifts);
    if let Ok(text) = fs::read_to_string(path) {
        if text.lines().any(|l| l.trim() == format!("fingerprint = {fingerprint}")) {
            return Reference::load(path);
        }
    }
    log::info!("computing reference at h = {h}; caching in {}", path.display());
    let rule = lattice_for(cfg, cfg.estimator.reference_points, setup.basis.len())?;
    let reference = qmc_reference(problem, level, &rule, shifts, cfg.estimator.seed)?;
    let mut buf = Vec::new();
    reference.write(&mut buf)?;
    buf.extend_from_slice(format!("fingerprint = {fingerprint}\n").as_bytes());
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, buf)?;
    Ok(reference)
}

/// Screened variances of the linearised ratio terms and the MLMC level costs.
fn mlmc_inputs(problem: &Problem, samples: usize, seed: u64, ratio: f64, dependence: Dependence) -> Result<(Vec<f64>, Vec<f64>)> {
    let screens = screen_levels(problem, problem.levels(), samples, seed)?;
    let v = screens.iter().map(|s| s.ratio_variance(ratio, dependence)).collect();
    let c = (0..problem.levels())
        .map(|l| problem.level_cost(l) + if l > 0 { problem.level_cost(l - 1) } else { 0.0 })
        .collect();
    Ok((v, c))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NRow {
    pub method: Method,
    pub dependence: Dependence,
    pub n: usize,
    pub samples: Vec<usize>,
    pub error: ErrorRow,
}

#[derive(Clone, Debug)]
pub struct SamplingStudy {
    pub rows: Vec<NRow>,
    pub reference: Reference,
    pub table: Table,
}

impl SamplingStudy {
    pub fn fit(&self, method: Method, dependence: Dependence) -> Option<LogLogFit> {
        let rows: Vec<&NRow> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.dependence == dependence)
            .collect();
        if rows.len() < 2 {
            return None;
        }
        let n: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.error.error_ratio).collect();
        Some(loglog_fit(&n, &e))
    }
}

/// Runs one estimator at cost-equivalent sample size `n` on the finest level
/// of `problem`. MLMC spends the budget `n h^-2` per estimator.
#[allow(clippy::too_many_arguments)]
fn run_method(
    cfg: &StudyConfig,
    problem: &Problem,
    method: Method,
    dependence: Dependence,
    n: usize,
    replications: usize,
    seed: u64,
    mlmc: Option<&(Vec<f64>, Vec<f64>)>,
) -> Result<EstimatorReport> {
    let level = problem.levels() - 1;
    match method {
        Method::Mc => mc_estimate(
            &SamplePlan::single_level(Method::Mc, n, level, replications, seed).with_dependence(dependence),
            problem,
        ),
        Method::Qmc => {
            let rule = lattice_for(cfg, n as u64, problem.basis().len())?;
            qmc_estimate(
                &SamplePlan::single_level(Method::Qmc, n, level, replications, seed).with_dependence(dependence),
                problem,
                &rule,
            )
        }
        Method::Mlmc => {
            let (v, c) = mlmc.expect("MLMC inputs screened");
            let budget = n as f64 * problem.level_cost(level);
            let samples = allocate_for_budget(v, c, budget)?;
            mlmc_estimate(
                &SamplePlan::multilevel(samples, replications, seed).with_dependence(dependence),
                problem,
            )
        }
    }
}

fn replications_for(cfg: &StudyConfig, method: Method) -> usize {
    match method {
        Method::Qmc => cfg.estimator.qmc_shifts,
        _ => cfg.estimator.mc_replications,
    }
}

const SAMPLING_COLUMNS: [&str; 12] = [
    "method",
    "dependence",
    "n",
    "samples",
    "error_ratio",
    "error_q",
    "error_z",
    "cost_units",
    "replications",
    "nonpositive_denominators",
    "ratio_bound_violations",
    "mean_ratio",
];

fn sampling_row(method: Method, dependence: Dependence, n: usize, report: &EstimatorReport, reference: &Reference) -> (NRow, Vec<String>) {
    let error = ErrorRow::from_report(n as f64, report, reference);
    let samples = report.samples.clone();
    let fields = vec![
        method.name().to_string(),
        dependence.name().to_string(),
        n.to_string(),
        samples.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
        f(error.error_ratio),
        f(error.error_q),
        f(error.error_z),
        f(error.cost_units),
        error.replications.to_string(),
        error.nonpositive_denominators.to_string(),
        if method == Method::Mlmc || dependence == Dependence::Independent {
            "na".to_string()
        } else {
            error.ratio_bound_violations.to_string()
        },
        f(report.mean_ratio()),
    ];
    (
        NRow {
            method,
            dependence,
            n,
            samples,
            error,
        },
        fields,
    )
}

/// Sampling error against `N` at the fixed width `n_study_h`, per method and
/// dependence mode.
pub fn n_study(setup: &Setup) -> Result<SamplingStudy> {
    let cfg = &setup.config;
    let e = &cfg.estimator;
    let problem = setup.problem_to(e.n_study_h, setup.data.clone())?;
    let start = Instant::now();
    let reference = reference_for(setup, &problem, &cfg.path(&cfg.output.reference), e.reference_shifts)?;
    let mut timing = vec![("reference".to_string(), start.elapsed().as_secs_f64())];
    let mut table = Table::new("n-study", cfg, &SAMPLING_COLUMNS);
    table.comment(&format!(
        "reference: h = {:e}, q = {:e}, z = {:e}, ratio = {:e}, ratio_stderr = {:e}",
        problem.hierarchy().finest().h(),
        reference.q,
        reference.z,
        reference.ratio(),
        reference.ratio_stderr
    ));
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &dependence in &e.dependence {
        for &method in &e.methods {
            let mlmc = if method == Method::Mlmc {
                Some(mlmc_inputs(&problem, e.screen_samples, e.seed, reference.ratio(), dependence)?)
            } else {
                None
            };
            let mut ns = Vec::new();
            let mut errs = Vec::new();
            for &n in &e.n_grid {
                let report = run_method(cfg, &problem, method, dependence, n, replications_for(cfg, method), e.seed, mlmc.as_ref())?;
                timing.push((format!("{}-{}-{n}", method.name(), dependence.name()), report.walltime_s));
                let (row, fields) = sampling_row(method, dependence, n, &report, &reference);
                table.row(&fields);
                ns.push(n as f64);
                errs.push(row.error.error_ratio);
                rows.push(row);
            }
            if ns.len() >= 2 {
                fits.push(fit_line(
                    &format!("{} {} error_ratio vs n", method.name(), dependence.name()),
                    &loglog_fit(&ns, &errs),
                ));
            }
        }
    }
    for line in &fits {
        table.comment(line);
    }
    let path = cfg.path(&cfg.output.n_study);
    table.save(&path)?;
    save_timing(&path, &timing)?;
    Ok(SamplingStudy { rows, reference, table })
}

// ----------------------------------------------------------- cost study ----

#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub epsilon: f64,
    pub method: Method,
    pub dependence: Dependence,
    pub h: f64,
    pub bias: f64,
    pub samples: Vec<usize>,
    pub sampling_variance: f64,
    pub cost_units: f64,
}

#[derive(Clone, Debug)]
pub struct CostStudy {
    pub rows: Vec<CostRow>,
    pub bias_fit: LogLogFit,
    pub epsilon_scale: f64,
    pub table: Table,
}

impl CostStudy {
    pub fn fit(&self, method: Method, dependence: Dependence) -> Option<LogLogFit> {
        let rows: Vec<&CostRow> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.dependence == dependence)
            .collect();
        if rows.len() < 2 {
            return None;
        }
        let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        let cost: Vec<f64> = rows.iter().map(|r| r.cost_units).collect();
        Some(loglog_fit(&eps, &cost))
    }
}

/// Reads `(x, y)` columns of a study CSV, skipping comments and the header.
pub fn read_columns(path: &Path, filter: &dyn Fn(&[&str]) -> bool, x: usize, y: usize) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|_| Error::MissingReference(path.to_path_buf()))?;
    let ctx = path.display().to_string();
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if !filter(&cols) {
            continue;
        }
        let parse = |i: usize| -> Result<f64> {
            cols.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(&ctx, format!("bad line {line:?}")))
        };
        out.push((parse(x)?, parse(y)?));
    }
    Ok(out)
}

fn fit_pairs(pairs: &[(f64, f64)]) -> Option<LogLogFit> {
    let pairs: Vec<&(f64, f64)> = pairs.iter().filter(|p| p.1 > 0.0).collect();
    if pairs.len() < 2 {
        return None;
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Some(loglog_fit(&x, &y))
}

/// Cost of reaching RMSE `eps` per method, from the h-study bias fit, the
/// N-study QMC error fit and a fresh level screening: `h` is the coarsest
/// hierarchy width with fitted bias `<= eps/sqrt 2`, and sample sizes bring
/// the sampling error to `eps/sqrt 2`.
pub fn cost_study(setup: &Setup) -> Result<CostStudy> {
    let cfg = &setup.config;
    let e = &cfg.estimator;
    let start = Instant::now();
    let h_rows = read_columns(&cfg.path(&cfg.output.h_study), &|_| true, 0, 7)?;
    let bias_fit = fit_pairs(&h_rows).ok_or_else(|| {
        Error::InvalidParameter("h-study CSV has fewer than two positive differences".into())
    })?;
    let (screens, _) = screening(setup)?;
    let problem = setup.full_problem()?;
    let widths: Vec<f64> = problem.hierarchy().levels().iter().map(|m| m.h()).collect();
    let level_costs: Vec<f64> = (0..problem.levels()).map(|l| problem.level_cost(l)).collect();
    let finest = screens.last().expect("at least one level");
    let ratio = finest.mean_psi / finest.mean_theta;
    let z = finest.mean_theta;
    let bias = |h: f64| bias_fit.predict(h);
    let scale = match e.epsilon_scale {
        Some(s) => s,
        None => {
            let k_max = e.epsilon_exponents.iter().copied().max().unwrap_or(0);
            2f64.sqrt() * bias(*widths.last().unwrap()) * 2f64.powi(k_max)
        }
    };
    let n_study_path = cfg.path(&cfg.output.n_study);
    let n_h = e.n_study_h;
    let n_level = widths.iter().position(|w| (w - n_h).abs() < 1e-12).unwrap_or(0);
    let mut table = Table::new(
        "cost-study",
        cfg,
        &["epsilon", "method", "dependence", "h", "cells", "bias", "samples", "sampling_variance", "cost_units"],
    );
    table.comment(&fit_line("bias (h-study diff_ratio vs h)", &bias_fit));
    table.comment(&format!("epsilon_scale = {scale:e}"));
    let mut rows = Vec::new();
    let mut grid: Vec<i32> = e.epsilon_exponents.clone();
    grid.sort_unstable();
    for &dependence in &e.dependence {
        let copies = match dependence {
            Dependence::Dependent => 1.0,
            Dependence::Independent => 2.0,
        };
        let qmc_fit = if e.methods.contains(&Method::Qmc) {
            let dep = dependence.name().to_string();
            let pairs = read_columns(&n_study_path, &|c| c.first() == Some(&"qmc") && c.get(1).map(|s| *s) == Some(dep.as_str()), 2, 4)?;
            Some(fit_pairs(&pairs).ok_or_else(|| {
                Error::InvalidParameter(format!("n-study CSV lacks qmc {} rows", dependence.name()))
            })?)
        } else {
            None
        };
        for &method in &e.methods {
            for &k in &grid {
                let eps = scale * 2f64.powi(-k);
                let target = eps / 2f64.sqrt();
                let level = widths
                    .iter()
                    .position(|&h| bias(h) <= target)
                    .unwrap_or(widths.len() - 1);
                let h = widths[level];
                let plain_var = |l: usize| screens[l].plain_ratio_variance(ratio, dependence) / (z * z);
                let (samples, variance, cost) = match method {
                    Method::Mc => {
                        let v = plain_var(level);
                        let n = ((v / (target * target)).ceil() as usize).max(1);
                        (vec![n], v / n as f64, copies * n as f64 * level_costs[level])
                    }
                    Method::Qmc => {
                        let fit = qmc_fit.as_ref().expect("qmc fit");
                        let c = 10f64.powf(fit.intercept) * (plain_var(level) / plain_var(n_level)).sqrt();
                        let n = ((target / c).powf(1.0 / fit.slope).ceil() as usize).max(1);
                        let err = c * (n as f64).powf(fit.slope);
                        (vec![n], err * err, copies * n as f64 * level_costs[level])
                    }
                    Method::Mlmc => {
                        let v: Vec<f64> = screens[..=level]
                            .iter()
                            .map(|s| s.ratio_variance(ratio, dependence) / (z * z))
                            .collect();
                        let c: Vec<f64> = (0..=level)
                            .map(|l| level_costs[l] + if l > 0 { level_costs[l - 1] } else { 0.0 })
                            .collect();
                        let n = allocate_for_tolerance(&v, &c, target * target)?;
                        let var = v.iter().zip(&n).map(|(v, &n)| v / n as f64).sum();
                        let cost = copies * mlmc_cost(&n, &level_costs[..=level]);
                        (n, var, cost)
                    }
                };
                table.row(&[
                    f(eps),
                    method.name().to_string(),
                    dependence.name().to_string(),
                    f(h),
                    problem.hierarchy().level(level).cells().to_string(),
                    f(bias(h)),
                    samples.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
                    f(variance),
                    f(cost),
                ]);
                rows.push(CostRow {
                    epsilon: eps,
                    method,
                    dependence,
                    h,
                    bias: bias(h),
                    samples,
                    sampling_variance: variance,
                    cost_units: cost,
                });
            }
        }
    }
    let mut study = CostStudy {
        rows,
        bias_fit,
        epsilon_scale: scale,
        table,
    };
    for &dependence in &e.dependence {
        for &method in &e.methods {
            if let Some(fit) = study.fit(method, dependence) {
                let line = fit_line(&format!("{} {} cost vs epsilon", method.name(), dependence.name()), &fit);
                study.table.comment(&line);
            }
        }
    }
    let path = cfg.path(&cfg.output.cost_study);
    study.table.save(&path)?;
    save_timing(&path, &[("cost-study".into(), start.elapsed().as_secs_f64())])?;
    Ok(study)
}

// ----------------------------------------------------- robustness study ----

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessRow {
    pub sweep: &'static str,
    pub value: f64,
    pub row: NRow,
    pub reference_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct RobustnessStudy {
    pub rows: Vec<RobustnessRow>,
    pub table: Table,
}

impl RobustnessStudy {
    /// Log-log slope of the ratio error against the swept value.
    pub fn trend(&self, sweep: &str, method: Method) -> Option<LogLogFit> {
        let pairs: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.sweep == sweep && r.row.method == method)
            .map(|r| (r.value, r.row.error.error_ratio))
            .collect();
        fit_pairs(&pairs)
    }
}

/// Dependent sampling errors at `N = robustness_samples` while sweeping the
/// noise level (fixed `m`) and the observation count (fixed noise level).
pub fn robustness_study(setup: &Setup) -> Result<RobustnessStudy> {
    let cfg = &setup.config;
    let e = &cfg.estimator;
    let start = Instant::now();
    let mut configs: Vec<(&'static str, f64, ObservationSet)> = Vec::new();
    for &s in &e.noise_grid {
        configs.push(("noise_variance", s, setup.data.with_noise_variance(s)?));
    }
    for &m in &e.observation_grid {
        configs.push(("observations", m as f64, data_for(cfg, &setup.basis, m)?));
    }
    let mut table = Table::new(
        "robustness-study",
        cfg,
        &[
            "sweep", "value", "method", "n", "samples", "error_ratio", "error_q", "error_z", "cost_units",
            "replications", "nonpositive_denominators", "ratio_bound_violations", "reference_ratio",
            "reference_z",
        ],
    );
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    let n = e.robustness_samples;
    for (idx, (sweep, value, data)) in configs.into_iter().enumerate() {
        let problem = setup.problem_to(e.n_study_h, data)?;
        let ref_path = cfg
            .output
            .directory
            .join(format!("robustness_reference_{sweep}_{value}.txt"));
        let t = Instant::now();
        let reference = reference_for(setup, &problem, &ref_path, e.robustness_reference_shifts)?;
        timing.push((format!("reference-{idx}"), t.elapsed().as_secs_f64()));
        for &method in &e.methods {
            let mlmc = if method == Method::Mlmc {
                Some(mlmc_inputs(&problem, e.screen_samples, e.seed, reference.ratio(), Dependence::Dependent)?)
            } else {
                None
            };
            let report = run_method(
                cfg,
                &problem,
                method,
                Dependence::Dependent,
                n,
                replications_for(cfg, method),
                e.seed,
                mlmc.as_ref(),
            )?;
            timing.push((format!("{sweep}-{value}-{}", method.name()), report.walltime_s));
            let (row, fields) = sampling_row(method, Dependence::Dependent, n, &report, &reference);
            let mut out = vec![sweep.to_string(), f(value)];
            out.push(fields[0].clone());
            out.extend_from_slice(&fields[2..11]);
            out.push(f(reference.ratio()));
            out.push(f(reference.z));
            table.row(&out);
            rows.push(RobustnessRow {
                sweep,
                value,
                row,
                reference_ratio: reference.ratio(),
            });
        }
    }
    let mut study = RobustnessStudy { rows, table };
    for sweep in ["noise_variance", "observations"] {
        for &method in &e.methods {
            if let Some(fit) = study.trend(sweep, method) {
                let line = fit_line(&format!("{} error_ratio vs {sweep}", method.name()), &fit);
                study.table.comment(&line);
            }
        }
    }
    let path = cfg.path(&cfg.output.robustness_study);
    study.table.save(&path)?;
    timing.push(("total".into(), start.elapsed().as_secs_f64()));
    save_timing(&path, &timing)?;
    Ok(study)
}
