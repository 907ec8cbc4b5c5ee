//! Study configuration: a TOML file with four blocks, every field optional.
//!
//! ```toml
//! [problem]
//! variance = 1.0
//! correlation_length = 0.3
//! modes = 200
//! prior = "gaussian"
//! h_star = 0.015625
//! observations = 9
//! noise_variance = 0.09
//! truth_seed = 1
//! noise_seed = 2
//!
//! [discretisation]
//! h0 = 0.125
//! levels = 3
//! solver_tol = 1e-10
//!
//! [estimator]
//! seed = 2024
//! n_grid = [16, 32, 64, 128, 256, 512, 1024, 2048, 4096]
//!
//! [output]
//! directory = "out"
//! ```
//!
//! See [`StudyConfig::default`] for every default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{Dependence, Method};
use crate::fem::cells_for_width;
use crate::qmc::WeightSpec;
use crate::randfield::{CovarianceSpec, PriorKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub variance: f64,
    pub correlation_length: f64,
    /// KL truncation order `J`.
    pub modes: usize,
    pub prior: PriorKind,
    pub mean: f64,
    pub k_star: f64,
    /// Width of the reference (data) mesh.
    pub h_star: f64,
    pub observations: usize,
    pub noise_variance: f64,
    pub truth_seed: u64,
    pub noise_seed: u64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            variance: 1.0,
            correlation_length: 0.3,
            modes: 200,
            prior: PriorKind::Gaussian,
            mean: 0.0,
            k_star: 0.0,
            h_star: 1.0 / 64.0,
            observations: 9,
            noise_variance: 0.09,
            truth_seed: 1,
            noise_seed: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretisationConfig {
    pub h0: f64,
    /// Number of refinements `L`; the finest MLMC width is `h0 / 2^L`.
    pub levels: usize,
    pub solver_tol: f64,
    /// Replace the random coefficient by this constant (debugging).
    pub frozen_coefficient: Option<f64>,
}

impl Default for DiscretisationConfig {
    fn default() -> Self {
        DiscretisationConfig {
            h0: 0.125,
            levels: 3,
            solver_tol: 1e-10,
            frozen_coefficient: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub seed: u64,
    pub methods: Vec<Method>,
    pub dependence: Vec<Dependence>,
    pub mc_replications: usize,
    pub qmc_shifts: usize,
    /// Widths at which `|Q_h/Z_h - Q_2h/Z_2h|` is reported.
    pub h_grid: Vec<f64>,
    pub h_study_points: u64,
    pub h_study_shifts: usize,
    /// Fixed mesh width of the N-study and the robustness study.
    pub n_study_h: f64,
    pub n_grid: Vec<usize>,
    /// Lattice size and shift count of the cached N-study reference.
    pub reference_points: u64,
    pub reference_shifts: usize,
    pub screen_samples: usize,
    /// `eps_k = scale * 2^-k` for these `k`.
    pub epsilon_exponents: Vec<i32>,
    /// `None` calibrates the scale so that the smallest tolerance needs `h*`.
    pub epsilon_scale: Option<f64>,
    pub noise_grid: Vec<f64>,
    pub observation_grid: Vec<usize>,
    pub robustness_samples: usize,
    /// Shifts of the per-configuration reference in the robustness study.
    pub robustness_reference_shifts: usize,
    /// Generating vector file; CBC construction when absent.
    pub lattice_file: Option<PathBuf>,
    pub weights: WeightSpec,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            seed: 2024,
            methods: vec![Method::Mc, Method::Qmc, Method::Mlmc],
            dependence: vec![Dependence::Dependent, Dependence::Independent],
            mc_replications: 20,
            qmc_shifts: 16,
            h_grid: vec![0.125, 0.0625, 0.03125],
            h_study_points: 1024,
            h_study_shifts: 8,
            n_study_h: 0.0625,
            n_grid: (4..=12).map(|k| 1usize << k).collect(),
            reference_points: 8192,
            reference_shifts: 32,
            screen_samples: 1000,
            epsilon_exponents: vec![3, 4, 5, 6],
            epsilon_scale: None,
            noise_grid: vec![0.01, 0.03, 0.09, 0.3, 1.0],
            observation_grid: vec![1, 4, 9, 16, 25],
            robustness_samples: 1024,
            robustness_reference_shifts: 8,
            lattice_file: None,
            weights: WeightSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub data: String,
    pub kl_cache: String,
    pub lattice: String,
    pub reference: String,
    pub h_study: String,
    pub n_study: String,
    pub screening: String,
    pub cost_study: String,
    pub robustness_study: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            data: "data.txt".into(),
            kl_cache: "kl_basis.txt".into(),
            lattice: "lattice.txt".into(),
            reference: "reference.txt".into(),
            h_study: "h_study.csv".into(),
            n_study: "n_study.csv".into(),
            screening: "screening.csv".into(),
            cost_study: "cost_study.csv".into(),
            robustness_study: "robustness_study.csv".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub problem: ProblemConfig,
    pub discretisation: DiscretisationConfig,
    pub estimator: EstimatorConfig,
    pub output: OutputConfig,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: StudyConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// The published experiment's scale: `h* = 1/256`, `J = 1400`. Runs take
    /// hours to days on a workstation.
    pub fn paper_scale() -> Self {
        let mut c = StudyConfig::default();
        c.problem.modes = 1400;
        c.problem.h_star = 1.0 / 256.0;
        c.discretisation.levels = 5;
        c.estimator.h_grid = vec![0.125, 0.0625, 0.03125, 0.015625, 0.0078125];
        c.estimator.n_grid = (4..=16).map(|k| 1usize << k).collect();
        c.estimator.reference_points = 1 << 16;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        let d = &self.discretisation;
        let e = &self.estimator;
        CovarianceSpec::new(p.variance, p.correlation_length)?;
        if p.modes == 0 {
            return Err(invalid("problem.modes must be >= 1"));
        }
        if !(p.noise_variance > 0.0) {
            return Err(invalid("problem.noise_variance must be positive"));
        }
        let reference = self.reference_cells()?;
        let finest = self.finest_cells()?;
        if reference % finest != 0 {
            return Err(invalid(format!(
                "h* = 1/{reference} must refine the finest MLMC mesh 1/{finest}"
            )));
        }
        for &h in e.h_grid.iter().chain([&e.n_study_h]) {
            let cells = cells_for_width(h)?;
            if reference % cells != 0 || reference < cells {
                return Err(invalid(format!(
                    "study width 1/{cells} is not nested in h* = 1/{reference}"
                )));
            }
        }
        if !(d.solver_tol > 0.0) {
            return Err(invalid("discretisation.solver_tol must be positive"));
        }
        if e.mc_replications == 0 || e.qmc_shifts == 0 || e.h_study_shifts == 0
            || e.reference_shifts == 0
            || e.robustness_reference_shifts == 0
        {
            return Err(invalid("replication and shift counts must be >= 1"));
        }
        if e.n_grid.iter().any(|&n| n == 0) || e.screen_samples < 2 || e.robustness_samples == 0 {
            return Err(invalid("sample counts must be >= 1 (screening >= 2)"));
        }
        if e.noise_grid.iter().any(|&s| !(s > 0.0)) {
            return Err(invalid("noise grid entries must be positive"));
        }
        e.weights.validate()?;
        Ok(())
    }

    pub fn covariance(&self) -> CovarianceSpec {
        CovarianceSpec {
            variance: self.problem.variance,
            correlation_length: self.problem.correlation_length,
            norm_order: 1,
        }
    }

    pub fn reference_cells(&self) -> Result<usize> {
        cells_for_width(self.problem.h_star)
    }

    pub fn coarsest_cells(&self) -> Result<usize> {
        cells_for_width(self.discretisation.h0)
    }

    pub fn finest_cells(&self) -> Result<usize> {
        Ok(self.coarsest_cells()? << self.discretisation.levels)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.output.directory.join(name)
    }

    /// TOML form without `output.directory`, which does not affect results.
    pub fn canonical_toml(&self) -> String {
        let mut value = toml::Value::try_from(self).expect("configuration serialises");
        if let Some(out) = value.get_mut("output").and_then(|o| o.as_table_mut()) {
            out.remove("directory");
        }
        toml::to_string(&value).expect("configuration serialises")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_toml`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        hex::encode(&digest[..8])
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = StudyConfig::default();
        c.validate().unwrap();
        let back = StudyConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.reference_cells().unwrap(), 64);
        assert_eq!(c.finest_cells().unwrap(), 64);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = StudyConfig::from_toml("[problem]\nobservations = 25\n").unwrap();
        assert_eq!(c.problem.observations, 25);
        assert_eq!(c.problem.modes, 200);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(StudyConfig::from_toml("[problem]\nmodez = 3\n").is_err());
    }

    #[test]
    fn hash_changes_with_content() {
        let a = StudyConfig::default();
        let mut b = a.clone();
        b.estimator.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), StudyConfig::default().hash());
        let mut c = a.clone();
        c.output.directory = "elsewhere".into();
        assert_eq!(a.hash(), c.hash());
    }

    #[test]
    fn non_nested_reference_rejected() {
        let mut c = StudyConfig::default();
        c.problem.h_star = 1.0 / 32.0;
        assert!(c.validate().is_err());
    }
}
