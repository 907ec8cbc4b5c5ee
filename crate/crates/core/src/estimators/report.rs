use serde::{Deserialize, Serialize};

use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Qmc,
    Mlmc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Qmc => "qmc",
            Method::Mlmc => "mlmc",
        }
    }
}

/// Whether numerator and denominator share samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dependence {
    #[default]
    Dependent,
    Independent,
}

impl Dependence {
    pub fn name(self) -> &'static str {
        match self {
            Dependence::Dependent => "dependent",
            Dependence::Independent => "independent",
        }
    }
}

/// What to run: sample counts, pairing and seeding.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    pub method: Method,
    /// `[N]` for MC and QMC, `[N_0, .., N_L]` for MLMC.
    pub samples: Vec<usize>,
    /// Mesh level for MC and QMC.
    pub level: usize,
    pub dependence: Dependence,
    pub seed: u64,
    /// Independent replications (MC, MLMC) or random shifts (QMC).
    pub replications: usize,
}

impl SamplePlan {
    pub fn single_level(method: Method, n: usize, level: usize, replications: usize, seed: u64) -> Self {
        SamplePlan {
            method,
            samples: vec![n],
            level,
            dependence: Dependence::Dependent,
            seed,
            replications,
        }
    }

    pub fn multilevel(samples: Vec<usize>, replications: usize, seed: u64) -> Self {
        SamplePlan {
            method: Method::Mlmc,
            level: samples.len().saturating_sub(1),
            samples,
            dependence: Dependence::Dependent,
            seed,
            replications,
        }
    }

    pub fn with_dependence(mut self, dependence: Dependence) -> Self {
        self.dependence = dependence;
        self
    }
}

/// Sample statistics of one MLMC level term within one replication.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelStat {
    pub samples: usize,
    pub mean_psi: f64,
    pub mean_theta: f64,
    pub var_psi: f64,
    pub var_theta: f64,
}

/// One independent run of an estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct Replication {
    pub q: f64,
    pub z: f64,
    pub ratio: f64,
    /// `max_i |phi(p_h^(i))|` over the numerator samples.
    pub max_abs_phi: f64,
    /// MLMC denominator came out `<= 0`; the ratio is then meaningless.
    pub nonpositive_denominator: bool,
    pub cost_units: f64,
    pub levels: Vec<LevelStat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorReport {
    pub method: Method,
    pub dependence: Dependence,
    pub samples: Vec<usize>,
    pub replications: Vec<Replication>,
    pub walltime_s: f64,
}

impl EstimatorReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.ratio).collect()
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.q).collect()
    }

    pub fn z_values(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.z).collect()
    }

    pub fn mean_ratio(&self) -> f64 {
        stats::mean(&self.ratios())
    }

    pub fn mean_q(&self) -> f64 {
        stats::mean(&self.q_values())
    }

    pub fn mean_z(&self) -> f64 {
        stats::mean(&self.z_values())
    }

    /// Sample variance of the ratio across replications.
    pub fn ratio_variance(&self) -> f64 {
        stats::sample_variance(&self.ratios())
    }

    /// Cost of a single replication (all replications cost the same).
    pub fn cost_units(&self) -> f64 {
        self.replications.first().map_or(0.0, |r| r.cost_units)
    }

    pub fn total_cost_units(&self) -> f64 {
        self.replications.iter().map(|r| r.cost_units).sum()
    }

    pub fn nonpositive_denominators(&self) -> usize {
        self.replications.iter().filter(|r| r.nonpositive_denominator).count()
    }

    /// Replications violating `|Q/Z| <= max_i |phi_i|` (dependent single-level only).
    pub fn ratio_bound_violations(&self) -> usize {
        self.replications
            .iter()
            .filter(|r| r.ratio.abs() > r.max_abs_phi)
            .count()
    }
}
