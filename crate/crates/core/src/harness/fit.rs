use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::stats::{ols, FitError};

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub window: (f64, f64),
}

/// Fits the points with `lo ≤ x ≤ hi`. Two points give the two-point slope
/// with zero standard error.
pub fn fit_points(points: &[(f64, f64)], window: (f64, f64)) -> Result<ExponentFit, FitError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(x, y) in points.iter().filter(|p| p.0 >= window.0 && p.0 <= window.1) {
        if !(x > 0.0) {
            return Err(FitError::NonPositive(x));
        }
        if !(y > 0.0) {
            return Err(FitError::NonPositive(y));
        }
        xs.push(x.ln());
        ys.push(y.ln());
    }
    let fit = ols(&xs, &ys)?;
    Ok(ExponentFit { xs, ys, slope: fit.slope, intercept: fit.intercept, stderr: fit.slope_stderr, window })
}

/// Fits `y_field` against `x_field` over records carrying both as numbers.
pub fn fit_exponent(records: &[Value], x_field: &str, y_field: &str, window: (f64, f64)) -> Result<ExponentFit, FitError> {
    let points: Vec<(f64, f64)> =
        records.iter().filter_map(|r| Some((r.get(x_field)?.as_f64()?, r.get(y_field)?.as_f64()?))).collect();
    fit_points(&points, window)
}

/// Mean of `value_field` grouped by `key_field` over records of one kind:
/// `(key, mean, count)` sorted by key.
pub fn mean_by(records: &[Value], kind: &str, key_field: &str, value_field: &str) -> Vec<(f64, f64, usize)> {
    let mut acc: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r["kind"] == kind) {
        let (Some(k), Some(v)) = (r.get(key_field).and_then(Value::as_f64), r.get(value_field).and_then(Value::as_f64)) else {
            continue;
        };
        // Keys are integers in practice; group them on a 1/1024 grid.
        let e = acc.entry((k * 1024.0).round() as i64).or_insert((k, 0.0, 0));
        e.1 += v;
        e.2 += 1;
    }
    acc.into_values().map(|(k, s, c)| (k, s / c as f64, c)).collect()
}
