//! Summation, moments and log-log regression.

/// Pairwise (tree) summation. The reduction order depends only on the slice
/// length, so results are reproducible regardless of how the values were
/// produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator); zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    sample_covariance(values, values)
}

pub fn sample_covariance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let ma = mean(a);
    let mb = mean(b);
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    pairwise_sum(&prods) / (n - 1) as f64
}

/// Root mean square of `values - target`.
pub fn rms_error(values: &[f64], target: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| (v - target).powi(2)).collect();
    mean(&sq).sqrt()
}

/// Least-squares line through `(log10 x, log10 y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; NaN with two points or fewer.
    pub slope_stderr: f64,
}

impl LogLogFit {
    /// Evaluates the fitted power law `10^intercept * x^slope`.
    pub fn predict(&self, x: f64) -> f64 {
        10f64.powf(self.intercept + self.slope * x.log10())
    }

    /// Inverts the power law: the `x` at which the fit equals `y`.
    pub fn solve_for_x(&self, y: f64) -> f64 {
        10f64.powf((y.log10() - self.intercept) / self.slope)
    }
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> LogLogFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points for a fit");
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = mean(&lx);
    let my = mean(&ly);
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if lx.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LogLogFit {
        slope,
        intercept,
        slope_stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        let fit = loglog_fit(&x, &y);
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.predict(16.0) - 3.0 * 16f64.powf(-1.5)).abs() < 1e-12);
        assert!((fit.solve_for_x(3.0) - 1.0).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
    }

    #[test]
    fn pairwise_matches_naive_for_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(sample_variance(&[1.0, 3.0]), 2.0);
    }
}
