//! Small summary-statistics helpers for Monte Carlo estimates.

use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// Standardised distance `(mean - target) / stderr`; zero when both the
    /// deviation and the error vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let dev = self.mean - target;
        if self.stderr > 0.0 {
            dev / self.stderr
        } else if dev.abs() < 1e-15 {
            0.0
        } else {
            dev.signum() * f64::INFINITY
        }
    }
}

/// Mean and standard error of a slice of observations.
pub fn estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate { mean: f64::NAN, stderr: f64::NAN, samples: 0 };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Estimate { mean, stderr: (var / n as f64).sqrt(), samples: n }
}

/// Proportion estimate from a success count.
pub fn proportion(successes: usize, trials: usize) -> Estimate {
    if trials == 0 {
        return Estimate { mean: f64::NAN, stderr: f64::NAN, samples: 0 };
    }
    let p = successes as f64 / trials as f64;
    Estimate { mean: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), samples: trials }
}

/// Sample covariance of two indicator-like series with a standard error
/// obtained from the per-sample centred products.
pub fn covariance(xs: &[f64], ys: &[f64]) -> Estimate {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let mut e = estimate(&prods);
    // Unbiased covariance uses n - 1.
    e.mean *= n as f64 / (n as f64 - 1.0).max(1.0);
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = estimate(&[2.0, 2.0, 2.0]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.z_score(2.0), 0.0);
    }

    #[test]
    fn covariance_of_anti_correlated_indicators() {
        let xs = [1.0, 0.0, 1.0, 0.0];
        let ys = [0.0, 1.0, 0.0, 1.0];
        assert!((covariance(&xs, &ys).mean + 1.0 / 3.0).abs() < 1e-12);
    }
}
