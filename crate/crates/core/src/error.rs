use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no sign change bracketing KL root {index} ({parity}) on [{lo}, {hi}]: f(lo)={f_lo:e}, f(hi)={f_hi:e}")]
    RootNotBracketed {
        index: usize,
        parity: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("could not resolve {requested} KL modes within a 1-D pool of {pool} modes")]
    ModePoolExhausted { requested: usize, pool: usize },

    #[error("uniform prior is not admissible: sum of b_j = {decay_sum} must be below min m0 = {mean_min}")]
    InadmissibleUniformPrior { decay_sum: f64, mean_min: f64 },

    #[error("coefficient field is not positive: k_min = {k_min}")]
    NonPositiveCoefficient { k_min: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e}); history tail {history:?}")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("generating vector component {component} = {value} is not coprime to N = {n}")]
    NotCoprime { component: usize, value: u64, n: u64 },

    #[error("generating vector file has {found} usable components, {needed} required")]
    ShortGeneratingVector { found: usize, needed: usize },

    #[error("inverse normal CDF argument {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("observation node {node:?} is not a vertex of the {mesh} mesh")]
    NodeNotOnMesh { node: (f64, f64), mesh: String },

    #[error("nonpositive screened variance at level {level}: {value}")]
    NonPositiveVariance { level: usize, value: f64 },

    #[error("missing reference cache {0}")]
    MissingReference(PathBuf),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("refusing to overwrite existing file {0} (use --force)")]
    FileExists(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
