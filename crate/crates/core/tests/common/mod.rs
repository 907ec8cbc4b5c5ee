//! Independent reference computations shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use bayes_ratio::qmc::WeightSpec;
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest eigenvalues of the 1-D kernel `exp(-|s-t|/lambda)` on `[0,1]` by a
/// midpoint Nystrom discretisation.
pub fn nystrom_eigenvalues(lambda: f64, n: usize, count: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    let k = DMatrix::from_fn(n, n, |i, j| h * (-(x[i] - x[j]).abs() / lambda).exp());
    let mut ev: Vec<f64> = k.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev.truncate(count);
    ev
}

/// `e^2` with `B2` in exact integer form `(6r^2 - 6rN + N^2) / (6N^2)`.
pub fn lattice_error_sq(n: u64, z: &[u64], weights: &WeightSpec) -> f64 {
    let n = n as i128;
    let mut total = 0.0;
    for k in 0..n {
        let mut prod = 1.0;
        for (j, &zj) in z.iter().enumerate() {
            let r = (k * zj as i128) % n;
            let b2 = (6 * r * r - 6 * r * n + n * n) as f64 / (6 * n * n) as f64;
            prod *= 1.0 + weights.gamma(j + 1) * b2;
        }
        total += prod;
    }
    total / n as f64 - 1.0
}

/// Minimum of [`lattice_error_sq`] over all of `{1..N-1}^dim`.
pub fn exhaustive_optimum(n: u64, dim: usize, weights: &WeightSpec) -> f64 {
    let mut vectors = vec![vec![]];
    for _ in 0..dim {
        vectors = vectors
            .into_iter()
            .flat_map(|v: Vec<u64>| {
                (1..n).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    vectors
        .iter()
        .map(|z| lattice_error_sq(n, z, weights))
        .fold(f64::INFINITY, f64::min)
}

/// `Phi^{-1}(p)` by bisection on the statrs normal CDF.
pub fn bisect_inverse_normal(p: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub const PUBLISHED_HEAD: &[u8] = include_bytes!("../fixtures/published_vector_head.txt");

/// A configuration small enough to run every study in seconds.
pub fn reduced_config(dir: &std::path::Path) -> bayes_ratio::config::StudyConfig {
    let mut c = bayes_ratio::config::StudyConfig::default();
    c.problem.modes = 20;
    c.problem.h_star = 1.0 / 32.0;
    c.discretisation.levels = 2;
    let e = &mut c.estimator;
    e.mc_replications = 4;
    e.qmc_shifts = 4;
    e.h_grid = vec![0.125, 0.0625];
    e.h_study_points = 64;
    e.h_study_shifts = 2;
    e.n_grid = vec![8, 16, 32];
    e.reference_points = 256;
    e.reference_shifts = 4;
    e.screen_samples = 40;
    e.epsilon_exponents = vec![3, 4, 5];
    e.noise_grid = vec![0.03, 0.3];
    e.observation_grid = vec![1, 4];
    e.robustness_samples = 16;
    e.robustness_reference_shifts = 2;
    c.output.directory = dir.to_path_buf();
    c.validate().unwrap();
    c
}

/// Runs every study on `config` and returns the study CSVs by file name.
pub fn run_all_studies(config: &bayes_ratio::config::StudyConfig) -> Vec<(String, Vec<u8>)> {
    use bayes_ratio::studies::{self, Setup};
    studies::cmd_generate_data(config, true).unwrap();
    let setup = Setup::new(config.clone()).unwrap();
    studies::h_study(&setup).unwrap();
    studies::n_study(&setup).unwrap();
    studies::cost_study(&setup).unwrap();
    studies::robustness_study(&setup).unwrap();
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&config.output.directory)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && !p.to_string_lossy().ends_with("_timing.csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}
