use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Largest n_a · n_b for which the exact null distribution is used.
const EXACT_LIMIT: usize = 400;

/// Midranks of the pooled sample (1-based) and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Number of arrangements giving each U value for sample sizes (m, n).
fn u_distribution(m: usize, n: usize) -> Vec<f64> {
    // counts[j][u] for the current m, over n' = 0..=n
    let max_u = m * n;
    let mut prev: Vec<Vec<f64>> = (0..=n).map(|_| vec![1.0]).collect(); // m = 0
    for mm in 1..=m {
        let mut cur: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        cur.push(vec![1.0]); // n' = 0: only U = 0
        for nn in 1..=n {
            let mut row = vec![0.0; mm * nn + 1];
            // last element belongs to a: it exceeds all nn of b
            for (u, c) in prev[nn].iter().enumerate() {
                row[u + nn] += c;
            }
            // last element belongs to b
            for (u, c) in cur[nn - 1].iter().enumerate() {
                row[u] += c;
            }
            cur.push(row);
        }
        prev = cur;
    }
    let mut out = prev.swap_remove(n);
    out.resize(max_u + 1, 0.0);
    out
}

/// Two-sided Mann–Whitney U test. Exact when n_a · n_b ≤ 400 and there are
/// no ties; otherwise the normal approximation with tie-corrected variance
/// and continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Invalid("both samples must be nonempty".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(StatsError::Invalid("NaN in sample".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let ra: f64 = ranks[..na].iter().sum();
    let u = ra - (na * (na + 1)) as f64 / 2.0;
    let has_ties = ties.iter().any(|&t| t > 1);
    if na * nb <= EXACT_LIMIT && !has_ties {
        let dist = u_distribution(na, nb);
        let total: f64 = dist.iter().sum();
        let k = u.round() as usize;
        let lower: f64 = dist[..=k].iter().sum::<f64>() / total;
        let upper: f64 = dist[k..].iter().sum::<f64>() / total;
        return Ok(MannWhitney {
            u,
            p_value: (2.0 * lower.min(upper)).min(1.0),
            exact: true,
        });
    }
    let n = (na + nb) as f64;
    let mu = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5) / var.sqrt();
        (2.0 * Normal::standard().sf(z)).clamp(0.0, 1.0)
    };
    Ok(MannWhitney {
        u,
        p_value,
        exact: false,
    })
}
