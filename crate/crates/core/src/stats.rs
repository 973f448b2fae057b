//! Small statistics kit: empirical quantiles, bootstrap intervals, and
//! least-squares fits of log-log data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("all abscissae are equal")]
    Degenerate,
    #[error("non-positive value {0} in a log-log fit")]
    NonPositive(f64),
}

/// `inf { x : F̂(x) ≥ level }` for the empirical distribution of `sorted`.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let m = sorted.len();
    let k = ((level * m as f64).ceil() as usize).clamp(1, m);
    sorted[k - 1]
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Percentile bootstrap interval for the `level` quantile.
pub fn bootstrap_quantile_ci(values: &[f64], level: f64, resamples: usize, confidence: f64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = values.len();
    let mut buf = vec![0.0; m];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = values[rng.gen_range(0..m)];
            }
            buf.sort_by(|a, b| a.total_cmp(b));
            empirical_quantile(&buf, level)
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    let tail = (1.0 - confidence) / 2.0;
    (empirical_quantile(&stats, tail), empirical_quantile(&stats, 1.0 - tail))
}

/// Quantile with its bootstrap interval, widened if needed to contain the point.
pub fn quantile_with_ci(values: &[f64], level: f64, resamples: usize, seed: u64) -> (f64, (f64, f64)) {
    let q = empirical_quantile(&sorted_copy(values), level);
    let (lo, hi) = bootstrap_quantile_ci(values, level, resamples, 0.95, seed);
    (q, (lo.min(q), hi.max(q)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Zero for a two-point fit.
    pub slope_stderr: f64,
    pub n_points: usize,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LinearFit, FitError> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return Err(FitError::TooFewPoints(n));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit { slope, intercept, slope_stderr, n_points: n })
}

/// Fit `log y` against `log x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, FitError> {
    let log = |v: &[f64]| -> Result<Vec<f64>, FitError> {
        v.iter().map(|&t| if t > 0.0 { Ok(t.ln()) } else { Err(FitError::NonPositive(t)) }).collect()
    };
    ols(&log(xs)?, &log(ys)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_definition() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&v, 0.5), 2.0);
        assert_eq!(empirical_quantile(&v, 0.75), 3.0);
        assert_eq!(empirical_quantile(&v, 0.76), 4.0);
        assert_eq!(empirical_quantile(&v, 1.0), 4.0);
        assert_eq!(empirical_quantile(&v, 0.0), 1.0);
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0], 0.5), 2.0);
    }

    #[test]
    fn quantile_matches_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let m = rng.gen_range(1..40);
            let v = sorted_copy(&(0..m).map(|_| rng.gen_range(0..10) as f64).collect::<Vec<_>>());
            let level = rng.gen_range(0.01..1.0);
            let q = empirical_quantile(&v, level);
            let cdf = |x: f64| v.iter().filter(|&&t| t <= x).count() as f64 / m as f64;
            assert!(cdf(q) >= level);
            assert!(v.iter().filter(|&&t| t < q).all(|&t| cdf(t) < level));
        }
    }

    #[test]
    fn bootstrap_contains_point_and_is_deterministic() {
        let v: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64).collect();
        let (q, (lo, hi)) = quantile_with_ci(&v, 0.5, 300, 4);
        assert!(lo <= q && q <= hi);
        assert_eq!(quantile_with_ci(&v, 0.5, 300, 4), (q, (lo, hi)));
        assert!(hi - lo < 20.0);
    }

    #[test]
    fn ols_recovers_lines() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let f = ols(&xs, &xs.map(|x| 2.0 * x - 1.0)).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept + 1.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
        let two = ols(&[0.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!((two.slope, two.slope_stderr), (2.0, 0.0));
        assert_eq!(ols(&[1.0], &[1.0]), Err(FitError::TooFewPoints(1)));
        assert_eq!(ols(&[1.0, 1.0], &[1.0, 2.0]), Err(FitError::Degenerate));
        let p = loglog_fit(&[8.0, 16.0, 32.0], &[3.0, 12.0, 48.0]).unwrap();
        assert!((p.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ols_stderr_matches_closed_form() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 0.0, 3.0, 2.0];
        let f = ols(&xs, &ys).unwrap();
        // Hand computation: slope 0.6, rss 3.2, sxx 5.
        assert!((f.slope - 0.6).abs() < 1e-12);
        assert!((f.slope_stderr - (3.2f64 / 2.0 / 5.0).sqrt()).abs() < 1e-12);
    }
}
