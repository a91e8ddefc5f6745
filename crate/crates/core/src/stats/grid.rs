//! The IS × socio-technical Granger grid and the related panel screens.

use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    adf_test, bh_adjust_at, granger_panel, mann_whitney_u, AdjustedTest, GrangerResult, PanelTestOptions, Result,
};
use crate::panel::{self, Outcome, PanelSeries, ProjectSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonStationaryPolicy {
    /// Drop the project from every pair involving the variable.
    Exclude,
    /// Use first differences of the variable instead.
    Difference,
    /// Test the levels regardless.
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub is_vars: Vec<String>,
    pub st_vars: Vec<String>,
    pub lag: usize,
    pub alpha: f64,
    pub small_sample: bool,
    pub policy: NonStationaryPolicy,
    /// ADF p-value at or below which a series counts as stationary.
    pub adf_alpha: f64,
}

pub const DEFAULT_GRID_ST_VARS: [&str; 6] = [
    panel::S_NUM_NODES,
    panel::S_GRAPH_DENSITY,
    panel::S_WEIGHTED_MEAN_DEGREE,
    panel::T_NUM_DEV_NODES,
    panel::T_NUM_FILE_NODES,
    panel::T_NUM_FILE_PER_DEV,
];

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            is_vars: panel::IS_VARS.iter().map(|s| s.to_string()).collect(),
            st_vars: DEFAULT_GRID_ST_VARS.iter().map(|s| s.to_string()).collect(),
            lag: 2,
            alpha: 0.01,
            small_sample: false,
            policy: NonStationaryPolicy::Exclude,
            adf_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRow {
    pub project_id: String,
    pub variable: String,
    pub n: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    /// `None` when the series is too short or degenerate for the test.
    pub stationary: Option<bool>,
}

/// Active span of one variable; `None` if it contains masked values.
fn active_series<'a>(p: &'a ProjectSeries, var: &str) -> Option<&'a [f64]> {
    let span = p.active_span()?;
    let s = &p.get(var)?[span];
    (!s.iter().any(|x| x.is_nan())).then_some(s)
}

fn screen(p: &ProjectSeries, var: &str, adf_alpha: f64) -> StationarityRow {
    let s = active_series(p, var).unwrap_or(&[]);
    let r = adf_test(s, None).ok();
    StationarityRow {
        project_id: p.project_id.clone(),
        variable: var.to_string(),
        n: s.len(),
        statistic: r.map(|r| r.statistic),
        p_value: r.map(|r| r.p_value),
        stationary: r.map(|r| r.p_value <= adf_alpha),
    }
}

/// ADF screen of every project and variable.
pub fn stationarity_table(panel: &PanelSeries, vars: &[String], adf_alpha: f64) -> Vec<StationarityRow> {
    panel
        .projects()
        .par_iter()
        .flat_map_iter(|p| vars.iter().map(move |v| screen(p, v, adf_alpha)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub group: Outcome,
    pub x_var: String,
    pub y_var: String,
    pub result: Option<GrangerResult>,
    /// Why the pair could not be tested.
    pub error: Option<String>,
    pub adjusted: Option<AdjustedTest>,
}

/// Series pair prepared for one project under the stationarity policy.
fn prepare(
    p: &ProjectSeries,
    x_var: &str,
    y_var: &str,
    stationary: &BTreeMap<(&str, &str), Option<bool>>,
    policy: NonStationaryPolicy,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let x = active_series(p, x_var)?;
    let y = active_series(p, y_var)?;
    let nonstat = |v: &str| stationary.get(&(p.project_id.as_str(), v)).copied().flatten() == Some(false);
    let (dx, dy) = (nonstat(x_var), nonstat(y_var));
    match policy {
        NonStationaryPolicy::Ignore => Some((x.to_vec(), y.to_vec())),
        NonStationaryPolicy::Exclude => (!dx && !dy).then(|| (x.to_vec(), y.to_vec())),
        NonStationaryPolicy::Difference => {
            if !dx && !dy {
                return Some((x.to_vec(), y.to_vec()));
            }
            let diff = |s: &[f64], d: bool| -> Vec<f64> {
                if d {
                    s.windows(2).map(|w| w[1] - w[0]).collect()
                } else {
                    s[1..].to_vec()
                }
            };
            Some((diff(x, dx), diff(y, dy)))
        }
    }
}

/// Every IS → ST and ST → IS pair in both outcome groups, with one joint
/// Benjamini–Hochberg adjustment over all tested pairs.
pub fn run_grid(panel: &PanelSeries, config: &GridConfig) -> Result<Vec<GridRow>> {
    for v in config.is_vars.iter().chain(&config.st_vars) {
        panel.require(v)?;
    }
    let vars: Vec<String> = config.is_vars.iter().chain(&config.st_vars).cloned().collect();
    let screens = if config.policy == NonStationaryPolicy::Ignore {
        Vec::new()
    } else {
        stationarity_table(panel, &vars, config.adf_alpha)
    };
    let stationary: BTreeMap<(&str, &str), Option<bool>> = screens
        .iter()
        .map(|r| ((r.project_id.as_str(), r.variable.as_str()), r.stationary))
        .collect();

    let mut jobs = Vec::new();
    for group in Outcome::ALL {
        for i in &config.is_vars {
            for s in &config.st_vars {
                jobs.push((group, i.clone(), s.clone()));
                jobs.push((group, s.clone(), i.clone()));
            }
        }
    }
    let options = PanelTestOptions {
        small_sample: config.small_sample,
    };
    let mut rows: Vec<GridRow> = jobs
        .into_par_iter()
        .map(|(group, x_var, y_var)| {
            let series: Vec<(Vec<f64>, Vec<f64>)> = panel
                .group(group)
                .filter_map(|p| prepare(p, &x_var, &y_var, &stationary, config.policy))
                .collect();
            let units: Vec<(&[f64], &[f64])> = series.iter().map(|(x, y)| (x.as_slice(), y.as_slice())).collect();
            let (result, error) = match granger_panel(&x_var, &y_var, &units, config.lag, options) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            GridRow {
                group,
                x_var,
                y_var,
                result,
                error,
                adjusted: None,
            }
        })
        .collect();

    let tested: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].result.is_some()).collect();
    let raw: Vec<f64> = tested.iter().map(|&i| rows[i].result.as_ref().unwrap().p_value).collect();
    for (&i, adj) in tested.iter().zip(bh_adjust_at(&raw, config.alpha)?) {
        rows[i].adjusted = Some(adj);
    }
    info!(
        "granger grid: {} pairs, {} tested, {} significant",
        rows.len(),
        tested.len(),
        rows.iter().filter(|r| r.adjusted.is_some_and(|a| a.significant)).count()
    );
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GrangerEdge {
    pub from: String,
    pub to: String,
    pub bidirectional: bool,
}

/// Significant directed links of one group; a pair significant in both
/// directions is reported once as bidirectional.
pub fn edge_list(rows: &[GridRow], group: Outcome) -> Vec<GrangerEdge> {
    let sig: Vec<(&str, &str)> = rows
        .iter()
        .filter(|r| r.group == group && r.adjusted.is_some_and(|a| a.significant))
        .map(|r| (r.x_var.as_str(), r.y_var.as_str()))
        .collect();
    let mut out = Vec::new();
    for &(x, y) in &sig {
        let both = sig.contains(&(y, x));
        if both && x > y {
            continue;
        }
        out.push(GrangerEdge {
            from: x.to_string(),
            to: y.to_string(),
            bidirectional: both,
        });
    }
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTestRow {
    pub variable: String,
    pub n_graduated: usize,
    pub n_retired: usize,
    pub mean_graduated: f64,
    pub mean_retired: f64,
    pub u: Option<f64>,
    pub p_value: Option<f64>,
    pub exact: Option<bool>,
}

/// Mann–Whitney comparison of graduated against retired project-months.
pub fn group_tests(panel: &PanelSeries, vars: &[String], include_inactive: bool) -> Vec<GroupTestRow> {
    vars.iter()
        .map(|v| {
            let g = panel.observations(v, include_inactive, Some(Outcome::Graduated));
            let r = panel.observations(v, include_inactive, Some(Outcome::Retired));
            let mean = |x: &[f64]| super::descriptive::mean(x).unwrap_or(f64::NAN);
            let t = mann_whitney_u(&g, &r).ok();
            GroupTestRow {
                variable: v.clone(),
                n_graduated: g.len(),
                n_retired: r.len(),
                mean_graduated: mean(&g),
                mean_retired: mean(&r),
                u: t.map(|t| t.u),
                p_value: t.map(|t| t.p_value),
                exact: t.map(|t| t.exact),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(group: Outcome, x: &str, y: &str, sig: bool) -> GridRow {
        GridRow {
            group,
            x_var: x.into(),
            y_var: y.into(),
            result: None,
            error: None,
            adjusted: Some(AdjustedTest {
                raw_p: 0.0,
                adjusted_p: if sig { 0.001 } else { 0.5 },
                significant: sig,
            }),
        }
    }

    #[test]
    fn edges_merge_bidirectional() {
        let rows = vec![
            row(Outcome::Graduated, "a", "b", true),
            row(Outcome::Graduated, "b", "a", true),
            row(Outcome::Graduated, "a", "c", true),
            row(Outcome::Graduated, "c", "a", false),
            row(Outcome::Retired, "a", "b", true),
        ];
        let e = edge_list(&rows, Outcome::Graduated);
        assert_eq!(e.len(), 2);
        assert!(e.contains(&GrangerEdge {
            from: "a".into(),
            to: "b".into(),
            bidirectional: true
        }));
        assert!(e.contains(&GrangerEdge {
            from: "a".into(),
            to: "c".into(),
            bidirectional: false
        }));
    }

    #[test]
    fn missing_variable_is_fatal() {
        let p = PanelSeries::new(vec![ProjectSeries {
            project_id: "p".into(),
            outcome: Outcome::Graduated,
            inactive: vec![false],
            values: [(panel::NUM_IS_MENTOR.to_string(), vec![1.0])].into(),
        }])
        .unwrap();
        let err = run_grid(&p, &GridConfig::default()).unwrap_err();
        assert!(err.to_string().contains("num_IS_committer"));
    }
}
