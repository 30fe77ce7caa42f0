//! Fixed-order sample statistics.

/// Sample mean, summed in slice order.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the mean.
pub fn std_error(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    libm::sqrt(variance(values) / values.len() as f64)
}

/// Least-squares slope of `log(err)` against `log(step)`.
pub fn log_log_slope(steps: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(steps.len(), errors.len());
    let xs: alloc::vec::Vec<f64> = steps.iter().map(|s| libm::log(*s)).collect();
    let ys: alloc::vec::Vec<f64> = errors.iter().map(|e| libm::log(*e)).collect();
    let mx = mean(&xs);
    let my = mean(&ys);
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let steps = [0.1, 0.05, 0.025];
        let errs: alloc::vec::Vec<f64> = steps.iter().map(|h| 3.0 * h * h).collect();
        assert!((log_log_slope(&steps, &errs) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mean_and_error() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert!((variance(&v) - 5.0 / 3.0).abs() < 1e-15);
        assert!((std_error(&v) - libm::sqrt(5.0 / 12.0)).abs() < 1e-15);
    }
}
