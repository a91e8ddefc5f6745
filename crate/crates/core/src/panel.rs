//! Project × month × variable table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::stats::descriptive::{mean, quantile_type7, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Graduated,
    Retired,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Graduated, Outcome::Retired];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Graduated => "graduated",
            Outcome::Retired => "retired",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "graduated" | "graduate" => Ok(Outcome::Graduated),
            "retired" | "retire" => Ok(Outcome::Retired),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

pub const S_NUM_NODES: &str = "s_num_nodes";
pub const S_GRAPH_DENSITY: &str = "s_graph_density";
pub const S_AVG_CLUSTERING_COEF: &str = "s_avg_clustering_coef";
pub const S_WEIGHTED_MEAN_DEGREE: &str = "s_weighted_mean_degree";
pub const T_GRAPH_DENSITY: &str = "t_graph_density";
pub const T_NUM_DEV_NODES: &str = "t_num_dev_nodes";
pub const T_NUM_FILE_NODES: &str = "t_num_file_nodes";
pub const T_NUM_FILE_PER_DEV: &str = "t_num_file_per_dev";
pub const NUM_IS_MENTOR: &str = "num_IS_mentor";
pub const NUM_IS_COMMITTER: &str = "num_IS_committer";
pub const NUM_IS_CONTRIBUTOR: &str = "num_IS_contributor";

pub const ST_VARS: [&str; 8] = [
    S_NUM_NODES,
    S_GRAPH_DENSITY,
    S_AVG_CLUSTERING_COEF,
    S_WEIGHTED_MEAN_DEGREE,
    T_GRAPH_DENSITY,
    T_NUM_DEV_NODES,
    T_NUM_FILE_NODES,
    T_NUM_FILE_PER_DEV,
];

pub const IS_VARS: [&str; 3] = [NUM_IS_MENTOR, NUM_IS_COMMITTER, NUM_IS_CONTRIBUTOR];

pub fn all_vars() -> impl Iterator<Item = &'static str> {
    ST_VARS.into_iter().chain(IS_VARS)
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum PanelError {
    #[error("project {project}: variable {variable} has {got} months, expected {expected}")]
    Length {
        project: String,
        variable: String,
        got: usize,
        expected: usize,
    },
    #[error("project {0} appears twice")]
    DuplicateProject(String),
    #[error("conflicting rows for project {project}, month {month}")]
    Conflict { project: String, month: i32 },
    #[error("project {0} has no manifest entry")]
    UnknownProject(String),
    #[error("variable {0} missing from panel")]
    MissingVariable(String),
}

/// Dense monthly series of one project, month 0 first.
///
/// A `NaN` value marks an observation masked for that variable (for example
/// by outlier trimming).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSeries {
    pub project_id: String,
    pub outcome: Outcome,
    pub inactive: Vec<bool>,
    pub values: BTreeMap<String, Vec<f64>>,
}

impl ProjectSeries {
    pub fn len(&self) -> usize {
        self.inactive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inactive.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<&[f64]> {
        self.values.get(var).map(Vec::as_slice)
    }

    /// Months from the first to the last active month.
    pub fn active_span(&self) -> Option<Range<usize>> {
        let first = self.inactive.iter().position(|f| !f)?;
        let last = self.inactive.iter().rposition(|f| !f)?;
        Some(first..last + 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelSeries {
    projects: Vec<ProjectSeries>,
}

impl PanelSeries {
    /// Projects are kept sorted by id; every variable must span the
    /// project's full month range.
    pub fn new(mut projects: Vec<ProjectSeries>) -> Result<Self, PanelError> {
        projects.sort_by(|a, b| a.project_id.cmp(&b.project_id));
        for w in projects.windows(2) {
            if w[0].project_id == w[1].project_id {
                return Err(PanelError::DuplicateProject(w[0].project_id.clone()));
            }
        }
        for p in &projects {
            for (var, v) in &p.values {
                if v.len() != p.len() {
                    return Err(PanelError::Length {
                        project: p.project_id.clone(),
                        variable: var.clone(),
                        got: v.len(),
                        expected: p.len(),
                    });
                }
            }
        }
        Ok(Self { projects })
    }

    pub fn projects(&self) -> &[ProjectSeries] {
        &self.projects
    }

    pub fn projects_mut(&mut self) -> &mut [ProjectSeries] {
        &mut self.projects
    }

    pub fn project(&self, id: &str) -> Option<&ProjectSeries> {
        self.projects.iter().find(|p| p.project_id == id)
    }

    pub fn group(&self, outcome: Outcome) -> impl Iterator<Item = &ProjectSeries> {
        self.projects.iter().filter(move |p| p.outcome == outcome)
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.projects
            .iter()
            .flat_map(|p| p.values.keys().map(String::as_str))
            .collect()
    }

    pub fn require(&self, var: &str) -> Result<(), PanelError> {
        if self.projects.iter().all(|p| p.values.contains_key(var)) && !self.projects.is_empty() {
            Ok(())
        } else {
            Err(PanelError::MissingVariable(var.to_string()))
        }
    }

    /// Unmasked observations of `var`, optionally skipping inactive months
    /// and restricted to one group.
    pub fn observations(&self, var: &str, include_inactive: bool, group: Option<Outcome>) -> Vec<f64> {
        self.projects
            .iter()
            .filter(|p| group.is_none_or(|g| p.outcome == g))
            .filter_map(|p| p.get(var).map(|v| (p, v)))
            .flat_map(|(p, v)| {
                v.iter()
                    .zip(&p.inactive)
                    .filter(move |(_, &off)| include_inactive || !off)
                    .map(|(&x, _)| x)
            })
            .filter(|x| !x.is_nan())
            .collect()
    }
}

/// Location and spread of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub variable: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl VariableSummary {
    pub fn of(variable: &str, values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p| quantile_type7(&sorted, p).unwrap_or(f64::NAN);
        Self {
            variable: variable.to_string(),
            n: sorted.len(),
            mean: mean(&sorted).unwrap_or(f64::NAN),
            sd: sample_sd(&sorted).unwrap_or(f64::NAN),
            min: q(0.0),
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: q(1.0),
        }
    }
}

/// Summary of every panel variable, with and without inactive months.
pub fn summarize(panel: &PanelSeries, group: Option<Outcome>) -> Vec<(VariableSummary, VariableSummary)> {
    all_vars()
        .filter(|v| panel.variables().contains(v))
        .map(|v| {
            (
                VariableSummary::of(v, &panel.observations(v, true, group)),
                VariableSummary::of(v, &panel.observations(v, false, group)),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(id: &str, outcome: Outcome, inactive: Vec<bool>, x: Vec<f64>) -> ProjectSeries {
        ProjectSeries {
            project_id: id.into(),
            outcome,
            inactive,
            values: [(S_NUM_NODES.to_string(), x)].into(),
        }
    }

    #[test]
    fn outcome_round_trip() {
        for o in Outcome::ALL {
            assert_eq!(o.to_string().parse::<Outcome>().unwrap(), o);
        }
        assert_eq!("Graduated".parse::<Outcome>().unwrap(), Outcome::Graduated);
        assert!("failed".parse::<Outcome>().is_err());
        assert_eq!(serde_json::to_string(&Outcome::Retired).unwrap(), "\"retired\"");
    }

    #[test]
    fn rejects_ragged_and_duplicate() {
        let bad = series("a", Outcome::Graduated, vec![false; 3], vec![1.0; 2]);
        assert!(matches!(PanelSeries::new(vec![bad]), Err(PanelError::Length { .. })));
        let a = series("a", Outcome::Graduated, vec![false], vec![1.0]);
        assert!(matches!(
            PanelSeries::new(vec![a.clone(), a]),
            Err(PanelError::DuplicateProject(_))
        ));
    }

    #[test]
    fn observations_respect_flags_and_masks() {
        let p = PanelSeries::new(vec![
            series("b", Outcome::Retired, vec![false, true, false], vec![1.0, 0.0, f64::NAN]),
            series("a", Outcome::Graduated, vec![false, false], vec![4.0, 6.0]),
        ])
        .unwrap();
        assert_eq!(p.projects()[0].project_id, "a");
        assert_eq!(p.observations(S_NUM_NODES, true, None), vec![4.0, 6.0, 1.0, 0.0]);
        assert_eq!(p.observations(S_NUM_NODES, false, None), vec![4.0, 6.0, 1.0]);
        assert_eq!(p.observations(S_NUM_NODES, true, Some(Outcome::Retired)), vec![1.0, 0.0]);
        assert!(p.require(S_NUM_NODES).is_ok());
        assert_eq!(p.require("x"), Err(PanelError::MissingVariable("x".into())));
    }

    #[test]
    fn active_span() {
        let s = series("a", Outcome::Graduated, vec![true, false, true, false, true], vec![0.0; 5]);
        assert_eq!(s.active_span(), Some(1..4));
        let s = series("a", Outcome::Graduated, vec![true, true], vec![0.0; 2]);
        assert_eq!(s.active_span(), None);
    }

    #[test]
    fn summary_values() {
        let s = VariableSummary::of("v", &[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.n, 4);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 1.75, 2.5, 3.25, 4.0));
    }
}
