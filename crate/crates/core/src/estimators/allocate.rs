//! MLMC sample allocation `N_l ∝ sqrt(V_l / C_l)`.

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 2;

fn check(variances: &[f64], costs: &[f64]) -> Result<()> {
    if variances.len() != costs.len() || variances.is_empty() {
        return Err(Error::InvalidParameter(
            "need one variance and one cost per level".into(),
        ));
    }
    for (level, &v) in variances.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonPositiveVariance { level, value: v });
        }
    }
    if costs.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidParameter("level costs must be positive".into()));
    }
    Ok(())
}

fn rounded(weights: impl Iterator<Item = f64>) -> Vec<usize> {
    weights
        .map(|n| (n.ceil() as usize).max(MIN_SAMPLES))
        .collect()
}

/// Scales the allocation so that level 0 receives `n0` samples.
pub fn allocate_levels(variances: &[f64], costs: &[f64], n0: usize) -> Result<Vec<usize>> {
    check(variances, costs)?;
    let w: Vec<f64> = variances.iter().zip(costs).map(|(v, c)| (v / c).sqrt()).collect();
    Ok(rounded(w.iter().map(|x| n0 as f64 * x / w[0])))
}

/// Cheapest allocation with `sum_l V_l / N_l <= target_variance`.
pub fn allocate_for_tolerance(variances: &[f64], costs: &[f64], target_variance: f64) -> Result<Vec<usize>> {
    check(variances, costs)?;
    if !(target_variance > 0.0) {
        return Err(Error::InvalidParameter("target variance must be positive".into()));
    }
    let s: f64 = variances.iter().zip(costs).map(|(v, c)| (v * c).sqrt()).sum();
    Ok(rounded(
        variances
            .iter()
            .zip(costs)
            .map(|(v, c)| s * (v / c).sqrt() / target_variance),
    ))
}

/// Allocation spending at most (before rounding) `budget` cost units.
pub fn allocate_for_budget(variances: &[f64], costs: &[f64], budget: f64) -> Result<Vec<usize>> {
    check(variances, costs)?;
    let s: f64 = variances.iter().zip(costs).map(|(v, c)| (v * c).sqrt()).sum();
    Ok(variances
        .iter()
        .zip(costs)
        .map(|(v, c)| ((budget * (v / c).sqrt() / s).floor() as usize).max(MIN_SAMPLES))
        .collect())
}

/// `N_0 h_0^-2 + sum_{l>=1} N_l (h_l^-2 + h_{l-1}^-2)` with `level_costs[l] = h_l^-2`.
pub fn mlmc_cost(samples: &[usize], level_costs: &[f64]) -> f64 {
    samples
        .iter()
        .enumerate()
        .map(|(l, &n)| {
            let c = level_costs[l] + if l > 0 { level_costs[l - 1] } else { 0.0 };
            n as f64 * c
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_variance_and_cost_give_equal_counts() {
        assert_eq!(allocate_levels(&[1.0; 4], &[3.0; 4], 100).unwrap(), vec![100; 4]);
    }

    #[test]
    fn h_squared_decay() {
        // V_l ∝ h_l^2, C_l ∝ h_l^-2 with h_l = 2^-l.
        let v: Vec<f64> = (0..4).map(|l| 4f64.powi(-l)).collect();
        let c: Vec<f64> = (0..4).map(|l| 4f64.powi(l)).collect();
        assert_eq!(allocate_levels(&v, &c, 6400).unwrap(), vec![6400, 1600, 400, 100]);
    }

    #[test]
    fn minimum_two() {
        let n = allocate_levels(&[1.0, 1e-12], &[1.0, 1.0], 10).unwrap();
        assert_eq!(n, vec![10, 2]);
    }

    #[test]
    fn tolerance_met() {
        let v = [2.0, 0.3, 0.05];
        let c = [64.0, 320.0, 1280.0];
        let n = allocate_for_tolerance(&v, &c, 1e-3).unwrap();
        let var: f64 = v.iter().zip(&n).map(|(v, &n)| v / n as f64).sum();
        assert!(var <= 1e-3);
    }

    #[test]
    fn rejects_nonpositive_variance() {
        assert!(matches!(
            allocate_levels(&[1.0, 0.0], &[1.0, 4.0], 10),
            Err(Error::NonPositiveVariance { level: 1, .. })
        ));
    }
}
