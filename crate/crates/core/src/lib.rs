//! Multilevel and quasi-Monte Carlo ratio estimators for posterior
//! expectations in a Bayesian inverse problem for the Darcy flow equation
//! `-div(k grad p) = f` on the unit square.
//!
//! The pieces, bottom up:
//!
//! * [`randfield`]: truncated Karhunen-Loève expansion of a lognormal (or
//!   affine uniform) coefficient with separable exponential covariance;
//! * [`fem`]: P1 finite elements on nested uniform triangulations, the
//!   outflow functional and patch-averaged point observations;
//! * [`bayes`]: observation sets, synthetic data and the Gaussian likelihood;
//! * [`qmc`]: rank-1 lattice rules, CBC construction and the normal inverse CDF;
//! * [`estimators`]: MC, QMC and MLMC estimators of `Q_h`, `Z_h` and the ratio;
//! * [`studies`]: the experiment drivers behind the command-line tool.

pub mod bayes;
pub mod config;
pub mod error;
pub mod estimators;
pub mod fem;
pub mod qmc;
pub mod randfield;
pub mod seed;
pub mod stats;
pub mod studies;

pub use error::{Error, Result};
