use super::descriptive::quantile_type7;
use super::{Result, StatsError};
use crate::panel::PanelSeries;

/// Mask (set to NaN) every observation strictly above the type-7
/// `1 − fraction` quantile of its variable, pooled over all project-months.
pub fn trim_outliers(panel: &PanelSeries, fraction: f64) -> Result<PanelSeries> {
    if !(fraction > 0.0 && fraction < 0.5) {
        return Err(StatsError::Invalid(format!("trim fraction {fraction} outside (0, 0.5)")));
    }
    let mut out = panel.clone();
    let vars: Vec<String> = panel.variables().into_iter().map(String::from).collect();
    for var in vars {
        let mut pooled = panel.observations(&var, true, None);
        if pooled.is_empty() {
            continue;
        }
        pooled.sort_by(f64::total_cmp);
        let cut = quantile_type7(&pooled, 1.0 - fraction).expect("nonempty");
        for p in out.projects_mut() {
            if let Some(v) = p.values.get_mut(&var) {
                for x in v.iter_mut().filter(|x| **x > cut) {
                    *x = f64::NAN;
                }
            }
        }
    }
    Ok(out)
}
