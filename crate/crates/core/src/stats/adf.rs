//! Augmented Dickey–Fuller test with constant and linear trend.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::ols;
use super::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub lags: usize,
    pub nobs: usize,
}

/// trunc((n − 1)^(1/3)).
pub fn default_adf_lags(n: usize) -> usize {
    if n < 2 {
        return 0;
    }
    let l = ((n - 1) as f64).cbrt();
    // guard against 7.999999 for perfect cubes
    (l + 1e-9).floor() as usize
}

const TABLE_T: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 500.0, 100000.0];
const TABLE_P: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];
/// Dickey–Fuller critical values, trend case; rows follow `TABLE_T`,
/// columns follow `TABLE_P`.
const TABLE: [[f64; 8]; 6] = [
    [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
    [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
    [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
    [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
    [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
    [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
];

/// Piecewise-linear interpolation with constant extrapolation.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let i = xs.windows(2).position(|w| x >= w[0] && x <= w[1]).unwrap();
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Table p-value for `statistic` at sample size `n` (the number of first
/// differences), clamped to [0.01, 0.99].
pub fn adf_p_value(statistic: f64, n: usize) -> f64 {
    let crit: Vec<f64> = (0..TABLE_P.len())
        .map(|j| {
            let col: Vec<f64> = TABLE.iter().map(|row| row[j]).collect();
            interp(&TABLE_T, &col, n as f64)
        })
        .collect();
    interp(&crit, &TABLE_P, statistic)
}

/// Regress Δy_t on (1, t, y_{t−1}, Δy_{t−1}, …, Δy_{t−lags}); the statistic is
/// the t-ratio of the y_{t−1} coefficient.
pub fn adf_test(series: &[f64], lags: Option<usize>) -> Result<AdfResult> {
    let n = series.len();
    let k = lags.unwrap_or_else(|| default_adf_lags(n));
    let needed = 3 * (k + 1) + 3;
    if n < needed {
        return Err(StatsError::TooShort { needed, got: n });
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // rows t = k .. dy.len()-1 (indices into dy)
    let nobs = dy.len() - k;
    let p = 3 + k;
    let x = DMatrix::from_fn(nobs, p, |r, c| {
        let t = r + k;
        match c {
            0 => 1.0,
            1 => (r + 1) as f64,
            2 => series[t],
            _ => dy[t - (c - 2)],
        }
    });
    let y = DVector::from_fn(nobs, |r, _| dy[r + k]);
    let fit = ols(&x, &y)?;
    let statistic = fit.t_ratio(2);
    if !statistic.is_finite() {
        return Err(StatsError::Singular);
    }
    Ok(AdfResult {
        statistic,
        p_value: adf_p_value(statistic, dy.len()),
        lags: k,
        nobs,
    })
}
