//! Naive component-by-component construction for product weights.
//!
//! For a shift-averaged rule in the unanchored weighted Sobolev space the
//! squared worst-case error of `z = (z_1..z_s)` is
//!
//! ```text
//! e^2 = -1 + (1/N) sum_{k=0}^{N-1} prod_{j<=s} (1 + gamma_j B2(frac(k z_j / N)))
//! ```
//!
//! with `B2(x) = x^2 - x + 1/6`. The running products over the fixed
//! components are kept per `k`, so each new component costs `O(N)` per
//! candidate and `O(N^2)` per dimension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{gcd, LatticeRule, Provenance};
use crate::error::{Error, Result};

/// Product weights `gamma_j = scale / j^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub exponent: f64,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec {
            exponent: 2.0,
            scale: 1.0,
        }
    }
}

impl WeightSpec {
    /// `gamma_j` for 1-based `j`.
    pub fn gamma(&self, j: usize) -> f64 {
        self.scale / (j as f64).powf(self.exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !(self.exponent >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "product weights need scale > 0 and exponent >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn bernoulli2(x: f64) -> f64 {
    x * x - x + 1.0 / 6.0
}

/// Criterion values of every candidate examined in one CBC step.
#[derive(Clone, Debug)]
pub struct CbcStep {
    /// `(candidate, e^2)`, candidates in increasing order.
    pub candidates: Vec<(u64, f64)>,
    pub chosen: u64,
}

pub fn cbc_construct(n: u64, dim: usize, weights: &WeightSpec) -> Result<LatticeRule> {
    cbc_construct_traced(n, dim, weights, false).map(|(rule, _)| rule)
}

/// Runs the construction, optionally keeping every candidate's criterion.
///
/// Candidates are the units modulo `N`. Since `B2(1 - x) = B2(x)`, `z` and
/// `N - z` score identically and only `z <= N/2` is searched; among
/// candidates equal to within rounding the smallest wins.
pub fn cbc_construct_traced(
    n: u64,
    dim: usize,
    weights: &WeightSpec,
    trace: bool,
) -> Result<(LatticeRule, Vec<CbcStep>)> {
    weights.validate()?;
    if dim == 0 {
        return Err(Error::InvalidParameter("CBC needs dimension >= 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("CBC needs N >= 2, got {n}")));
    }
    let nn = n as usize;
    let b2: Vec<f64> = (0..nn).map(|r| bernoulli2(r as f64 / n as f64)).collect();
    let candidates: Vec<u64> = (1..=n / 2).filter(|&z| gcd(z, n) == 1).collect();
    let mut products = vec![1.0f64; nn];
    let mut z = Vec::with_capacity(dim);
    let mut steps = Vec::new();
    for j in 1..=dim {
        let gamma = weights.gamma(j);
        let base: f64 = products.iter().sum();
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&cand| {
                let mut acc = 0.0;
                let mut idx = 0usize;
                let step = cand as usize;
                for p in &products {
                    acc += p * b2[idx];
                    idx += step;
                    if idx >= nn {
                        idx -= nn;
                    }
                }
                base + gamma * acc
            })
            .collect();
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * base.abs();
        let best = scores
            .iter()
            .position(|&s| s <= min + tol)
            .expect("at least one candidate");
        let chosen = candidates[best];
        if trace {
            steps.push(CbcStep {
                candidates: candidates
                    .iter()
                    .zip(&scores)
                    .map(|(&c, &s)| (c, s / n as f64 - 1.0))
                    .collect(),
                chosen,
            });
        }
        let mut idx = 0usize;
        for p in products.iter_mut() {
            *p *= 1.0 + gamma * b2[idx];
            idx += chosen as usize;
            if idx >= nn {
                idx -= nn;
            }
        }
        z.push(chosen);
    }
    Ok((LatticeRule::new(n, z, Provenance::Cbc)?, steps))
}

/// Squared shift-averaged worst-case error of a rule, evaluated directly.
pub fn worst_case_error_sq(rule: &LatticeRule, weights: &WeightSpec) -> f64 {
    let n = rule.points();
    let sum: f64 = (0..n)
        .map(|k| {
            rule.generating_vector()
                .iter()
                .enumerate()
                .map(|(j, &zj)| {
                    let x = ((k as u128 * zj as u128) % n as u128) as f64 / n as f64;
                    1.0 + weights.gamma(j + 1) * bernoulli2(x)
                })
                .product::<f64>()
        })
        .sum();
    sum / n as f64 - 1.0
}
