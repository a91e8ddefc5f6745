//! Ordinary least squares through a Householder QR factorization.

use nalgebra::{DMatrix, DVector};

use super::{Result, StatsError};

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta: DVector<f64>,
    pub rss: f64,
    pub nobs: usize,
    /// Diagonal of (XᵀX)⁻¹.
    pub xtx_inv_diag: DVector<f64>,
}

impl OlsFit {
    pub fn df_resid(&self) -> usize {
        self.nobs - self.beta.len()
    }

    /// Conventional standard error of coefficient `j`.
    pub fn std_error(&self, j: usize) -> f64 {
        let sigma2 = self.rss / self.df_resid() as f64;
        (sigma2 * self.xtx_inv_diag[j]).sqrt()
    }

    pub fn t_ratio(&self, j: usize) -> f64 {
        self.beta[j] / self.std_error(j)
    }
}

/// Relative size below which a diagonal entry of R counts as zero.
const RANK_TOL: f64 = 1e-10;

pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, p) = x.shape();
    if n != y.len() {
        return Err(StatsError::LengthMismatch(n, y.len()));
    }
    if n <= p {
        return Err(StatsError::TooShort { needed: p + 1, got: n });
    }
    // scale columns so the rank test does not depend on units
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            let s = x.column(j).norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let mut xs = x.clone();
    for (j, s) in scales.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }
    let qr = xs.qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= RANK_TOL * max_diag.max(1.0)) {
        return Err(StatsError::Singular);
    }
    let qty = qr.q().transpose() * y;
    let bs = r
        .solve_upper_triangular(&qty)
        .ok_or(StatsError::Singular)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(StatsError::Singular)?;
    let beta = DVector::from_iterator(p, bs.iter().zip(&scales).map(|(b, s)| b / s));
    let xtx_inv_diag = DVector::from_iterator(
        p,
        (0..p).map(|j| r_inv.row(j).norm_squared() / (scales[j] * scales[j])),
    );
    let resid = y - x * &beta;
    Ok(OlsFit {
        beta,
        rss: resid.norm_squared(),
        nobs: n,
        xtx_inv_diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_normal_equations() {
        let n = 30;
        let x = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => ((i * 7) % 11) as f64,
        });
        let y = DVector::from_fn(n, |i, _| 2.0 + 0.5 * i as f64 - 0.3 * ((i * 7) % 11) as f64 + ((i * 13) % 5) as f64 * 0.1);
        let fit = ols(&x, &y).unwrap();
        let xtx = x.transpose() * &x;
        let inv = xtx.clone().try_inverse().unwrap();
        let beta = &inv * x.transpose() * &y;
        for j in 0..3 {
            assert!((fit.beta[j] - beta[j]).abs() < 1e-9);
            assert!((fit.xtx_inv_diag[j] - inv[(j, j)]).abs() < 1e-9 * inv[(j, j)].abs().max(1.0));
        }
    }

    #[test]
    fn collinear_is_singular() {
        let x = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { 0.0 * i as f64 });
        let y = DVector::from_fn(10, |i, _| i as f64);
        assert!(matches!(ols(&x, &y), Err(StatsError::Singular)));
        let x = DMatrix::from_fn(10, 2, |_, j| if j == 0 { 1.0 } else { 3.0 });
        assert!(matches!(ols(&x, &y), Err(StatsError::Singular)));
    }
}
