use serde::{Deserialize, Serialize};

use super::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustedTest {
    pub raw_p: f64,
    pub adjusted_p: f64,
    pub significant: bool,
}

/// Benjamini–Hochberg step-up adjustment, significance at adjusted p < 0.01.
pub fn bh_adjust(p_values: &[f64]) -> Result<Vec<AdjustedTest>> {
    bh_adjust_at(p_values, 0.01)
}

pub fn bh_adjust_at(p_values: &[f64], alpha: f64) -> Result<Vec<AdjustedTest>> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::Invalid(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank0, &i) in order.iter().enumerate().rev() {
        let candidate = p_values[i] * m as f64 / (rank0 + 1) as f64;
        running = running.min(candidate);
        adjusted[i] = running.min(1.0);
    }
    Ok(p_values
        .iter()
        .zip(adjusted)
        .map(|(&raw_p, adjusted_p)| AdjustedTest {
            raw_p,
            adjusted_p,
            significant: adjusted_p < alpha,
        })
        .collect())
}
