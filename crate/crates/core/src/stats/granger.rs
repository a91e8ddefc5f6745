//! Pairwise Granger tests and their panel aggregation (Dumitrescu–Hurlin).

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

use super::linalg::ols;
use super::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrangerFTest {
    pub wald: f64,
    pub f: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
}

fn lagged_design(x: Option<&[f64]>, y: &[f64], k: usize) -> DMatrix<f64> {
    let t_eff = y.len() - k;
    let cols = 1 + k + if x.is_some() { k } else { 0 };
    DMatrix::from_fn(t_eff, cols, |r, c| {
        let t = r + k;
        if c == 0 {
            1.0
        } else if c <= k {
            y[t - c]
        } else {
            x.unwrap()[t - (c - k)]
        }
    })
}

/// Does `x` help predict `y` beyond `y`'s own `k` lags?
pub fn granger_f_test(x: &[f64], y: &[f64], k: usize) -> Result<GrangerFTest> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if k == 0 {
        return Err(StatsError::Invalid("lag order must be at least 1".into()));
    }
    let needed = 5 * k + 2;
    if y.len() < needed {
        return Err(StatsError::TooShort { needed, got: y.len() });
    }
    let target = DVector::from_row_slice(&y[k..]);
    let restricted = ols(&lagged_design(None, y, k), &target)?;
    let unrestricted = ols(&lagged_design(Some(x), y, k), &target)?;
    let t_eff = y.len() - k;
    let df_den = t_eff - 2 * k - 1;
    if unrestricted.rss <= 0.0 {
        return Err(StatsError::Singular);
    }
    let ratio = ((restricted.rss - unrestricted.rss) / unrestricted.rss).max(0.0);
    let wald = ratio * df_den as f64;
    let f = wald / k as f64;
    let dist = FisherSnedecor::new(k as f64, df_den as f64).map_err(|e| StatsError::Invalid(e.to_string()))?;
    Ok(GrangerFTest {
        wald,
        f,
        p_value: dist.sf(f).clamp(0.0, 1.0),
        df_num: k,
        df_den,
    })
}

/// Wald statistic (RSS_r − RSS_u)/RSS_u · (T − 2K − 1), T = effective
/// observations.
pub fn granger_pair(x: &[f64], y: &[f64], k: usize) -> Result<f64> {
    granger_f_test(x, y, k).map(|t| t.wald)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelTestOptions {
    /// Use the finite-T standardization (Z-tilde) for the p-value.
    pub small_sample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    pub x_var: String,
    pub y_var: String,
    pub lag: usize,
    pub wald: Vec<f64>,
    pub w_bar: f64,
    pub z_bar: f64,
    pub z_tilde: Option<f64>,
    pub p_value: f64,
    pub n_projects_used: usize,
    pub n_too_short: usize,
    pub n_degenerate: usize,
}

fn two_sided(z: f64) -> f64 {
    let n = Normal::standard();
    (2.0 * n.sf(z.abs())).clamp(0.0, 1.0)
}

/// Aggregate per-unit Wald statistics of `x → y`. Units shorter than
/// 5K + 2 or with a degenerate design are skipped and counted.
pub fn granger_panel(
    x_var: &str,
    y_var: &str,
    units: &[(&[f64], &[f64])],
    k: usize,
    options: PanelTestOptions,
) -> Result<GrangerResult> {
    let mut wald = Vec::new();
    let mut lens = Vec::new();
    let (mut too_short, mut degenerate) = (0, 0);
    for (i, (x, y)) in units.iter().enumerate() {
        match granger_pair(x, y, k) {
            Ok(w) => {
                wald.push(w);
                lens.push(y.len());
            }
            Err(StatsError::TooShort { .. }) => too_short += 1,
            Err(StatsError::LengthMismatch(a, b)) => return Err(StatsError::LengthMismatch(a, b)),
            Err(e) => {
                debug!("{x_var} -> {y_var}: unit {i} skipped: {e}");
                degenerate += 1;
            }
        }
    }
    let n = wald.len();
    if n < 2 {
        return Err(StatsError::TooFewProjects { needed: 2, got: n });
    }
    let kf = k as f64;
    let nf = n as f64;
    let w_bar = wald.iter().sum::<f64>() / nf;
    let z_bar = (nf / (2.0 * kf)).sqrt() * (w_bar - kf);
    // finite-T moments of each unit's statistic, T = series length
    let z_tilde = {
        let mut e_sum = 0.0;
        let mut v_sum = 0.0;
        let mut ok = true;
        for &t in &lens {
            let t = t as f64;
            let a = t - 3.0 * kf - 1.0;
            let b = t - 3.0 * kf - 3.0;
            let c = t - 3.0 * kf - 5.0;
            if c <= 0.0 {
                ok = false;
                break;
            }
            e_sum += kf * a / b;
            v_sum += 2.0 * kf * a * a * (t - 2.0 * kf - 3.0) / (b * b * c);
        }
        ok.then(|| nf.sqrt() * (w_bar - e_sum / nf) / (v_sum / nf).sqrt())
    };
    let z = if options.small_sample {
        z_tilde.ok_or_else(|| StatsError::Invalid("series too short for the small-sample correction".into()))?
    } else {
        z_bar
    };
    Ok(GrangerResult {
        x_var: x_var.to_string(),
        y_var: y_var.to_string(),
        lag: k,
        wald,
        w_bar,
        z_bar,
        z_tilde,
        p_value: two_sided(z),
        n_projects_used: n,
        n_too_short: too_short,
        n_degenerate: degenerate,
    })
}
