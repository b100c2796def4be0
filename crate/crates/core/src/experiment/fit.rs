//! Least-squares scaling laws in `log(1/t)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Result};

/// Minimum number of points and decades for a scaling fit.
pub const MIN_POINTS: usize = 5;
pub const MIN_DECADES: f64 = 1.5;

/// `log y = a log(1/t) + b log log(1/t) + c`. `b` is zero for a pure power fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Root mean square of the residuals in `log y`.
    pub residual: f64,
    pub points: usize,
}

fn check_span(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < MIN_POINTS {
        return Err(invalid(format!(
            "scaling fit needs {MIN_POINTS} points, got {}",
            points.len()
        )));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
    let decades = (hi / lo).log10();
    if !(decades >= MIN_DECADES) {
        return Err(invalid(format!(
            "scaling fit needs {MIN_DECADES} decades of t, got {decades:.3}"
        )));
    }
    for &(t, y) in points {
        if !(t > 0.0 && t < 1.0) || !(y > 0.0) || !y.is_finite() {
            return Err(invalid(format!("scaling fit needs 0 < t < 1 and y > 0, got ({t}, {y})")));
        }
    }
    Ok(())
}

fn least_squares(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let n = rows.len();
    let k = rows[0].len();
    let a = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let x = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| invalid(format!("least squares failed: {e}")))?;
    let r = &a * &x - &b;
    Ok((x.iter().copied().collect(), (r.norm_squared() / n as f64).sqrt()))
}

/// Fits `log y = a log(1/t) + b log log(1/t) + c` over `(t, y)` pairs.
/// When `t` approaches 1 the `log log` regressor is undefined, so every `t`
/// must satisfy `log(1/t) > 1`, i.e. `t < e^{-1}` up to rounding.
pub fn fit_log_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    check_span(points)?;
    if points.iter().any(|&(t, _)| (1.0 / t).ln() < 1.0 - 1e-12) {
        return Err(invalid("log-power fit needs t ≤ e^-1"));
    }
    let rows = points
        .iter()
        .map(|&(t, _)| {
            let l = (1.0 / t).ln();
            vec![l, l.ln().max(0.0), 1.0]
        })
        .collect();
    let rhs = points.iter().map(|&(_, y)| y.ln()).collect();
    let (x, residual) = least_squares(rows, rhs)?;
    Ok(ScalingFit {
        a: x[0],
        b: x[1],
        c: x[2],
        residual,
        points: points.len(),
    })
}

/// Fits `log y = a log(1/t) + c`.
pub fn fit_power(points: &[(f64, f64)]) -> Result<ScalingFit> {
    check_span(points)?;
    let rows = points.iter().map(|&(t, _)| vec![(1.0 / t).ln(), 1.0]).collect();
    let rhs = points.iter().map(|&(_, y)| y.ln()).collect();
    let (x, residual) = least_squares(rows, rhs)?;
    Ok(ScalingFit {
        a: x[0],
        b: 0.0,
        c: x[1],
        residual,
        points: points.len(),
    })
}
