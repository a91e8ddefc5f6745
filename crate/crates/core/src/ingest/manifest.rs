use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Datelike, Months, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::identity::{Role, RosterEntry};
use super::{IngestError, Result};
use crate::panel::Outcome;

/// Incubation metadata for one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectManifest {
    pub project_id: String,
    pub outcome: Outcome,
    pub incubation_start: NaiveDate,
    pub incubation_end: NaiveDate,
    #[serde(default)]
    pub roster: Vec<RosterEntry>,
}

impl ProjectManifest {
    pub fn new(
        project_id: impl Into<String>,
        outcome: Outcome,
        incubation_start: NaiveDate,
        incubation_end: NaiveDate,
    ) -> std::result::Result<Self, String> {
        let project_id = project_id.into();
        if incubation_start >= incubation_end {
            return Err(format!(
                "{project_id}: incubation_start {incubation_start} is not before incubation_end {incubation_end}"
            ));
        }
        Ok(Self {
            project_id,
            outcome,
            incubation_start,
            incubation_end,
            roster: Vec::new(),
        })
    }

    /// Retention window: one calendar month of slack on either side of the
    /// incubation period, inclusive.
    pub fn window(&self) -> (DateTime<Utc>, DateTime<Utc>) {
        let lo = self
            .incubation_start
            .checked_sub_months(Months::new(1))
            .unwrap_or(self.incubation_start);
        let hi = self
            .incubation_end
            .checked_add_months(Months::new(1))
            .unwrap_or(self.incubation_end)
            .succ_opt()
            .unwrap_or(self.incubation_end);
        (
            Utc.from_utc_datetime(&lo.and_hms_opt(0, 0, 0).unwrap()),
            Utc.from_utc_datetime(&hi.and_hms_opt(0, 0, 0).unwrap()),
        )
    }

    pub fn in_window(&self, ts: &DateTime<Utc>) -> bool {
        let (lo, hi) = self.window();
        *ts >= lo && *ts < hi
    }

    pub fn month_of(&self, ts: &DateTime<Utc>) -> i32 {
        month_index(self.incubation_start, ts)
    }

    /// Role of `identity` during `month` (months since incubation start).
    pub fn role_at(&self, identity: &str, month: i32) -> Role {
        let mut best: Option<(i32, Role)> = None;
        for entry in self.roster.iter().filter(|e| e.identity_key == identity) {
            let since = entry
                .since
                .map(|d| month_index(self.incubation_start, &Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).unwrap())))
                .unwrap_or(i32::MIN);
            if since > month {
                continue;
            }
            best = match best {
                Some((s, r)) if s > since || (s == since && r.precedence() >= entry.role.precedence()) => {
                    Some((s, r))
                }
                _ => Some((since, entry.role)),
            };
        }
        best.map(|(_, r)| r).unwrap_or(Role::Contributor)
    }
}

/// Calendar months (UTC) between the incubation start month and `ts`.
pub fn month_index(start: NaiveDate, ts: &DateTime<Utc>) -> i32 {
    let a = start.year() * 12 + start.month0() as i32;
    let b = ts.year() * 12 + ts.month0() as i32;
    b - a
}

#[derive(Deserialize)]
struct ProjectRow {
    project_id: String,
    outcome: String,
    incubation_start: String,
    incubation_end: String,
}

#[derive(Deserialize)]
struct RosterRow {
    project_id: String,
    identity_key: String,
    role: String,
    #[serde(default)]
    since: Option<String>,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d").ok())
}

/// Load `projects.csv` (`project_id,outcome,incubation_start,incubation_end`)
/// and, when given, a roster CSV (`project_id,identity_key,role[,since]`).
pub fn load_manifests(projects_csv: &Path, roster_csv: Option<&Path>) -> Result<Vec<ProjectManifest>> {
    let merr = |message: String| IngestError::Manifest {
        path: projects_csv.to_path_buf(),
        message,
    };
    if !projects_csv.exists() {
        return Err(merr("manifest file not found".into()));
    }
    let mut reader = csv::Reader::from_path(projects_csv).map_err(|e| merr(e.to_string()))?;
    let mut out: BTreeMap<String, ProjectManifest> = BTreeMap::new();
    for row in reader.deserialize::<ProjectRow>() {
        let row = row.map_err(|e| merr(e.to_string()))?;
        let outcome: Outcome = row.outcome.parse().map_err(merr)?;
        let start = parse_date(&row.incubation_start)
            .ok_or_else(|| merr(format!("bad incubation_start {:?}", row.incubation_start)))?;
        let end = parse_date(&row.incubation_end)
            .ok_or_else(|| merr(format!("bad incubation_end {:?}", row.incubation_end)))?;
        let m = ProjectManifest::new(row.project_id.trim(), outcome, start, end).map_err(merr)?;
        if out.insert(m.project_id.clone(), m).is_some() {
            return Err(merr(format!("duplicate project {}", row.project_id)));
        }
    }
    if let Some(roster) = roster_csv {
        let rerr = |message: String| IngestError::Csv {
            path: roster.to_path_buf(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_path(roster)
            .map_err(|e| rerr(e.to_string()))?;
        for row in reader.deserialize::<RosterRow>() {
            let row = row.map_err(|e| rerr(e.to_string()))?;
            let role: Role = row.role.parse().map_err(rerr)?;
            let since = match row.since.as_deref().map(str::trim) {
                None | Some("") => None,
                Some(s) => Some(parse_date(s).ok_or_else(|| rerr(format!("bad since {s:?}")))?),
            };
            if let Some(m) = out.get_mut(row.project_id.trim()) {
                m.roster.push(RosterEntry {
                    identity_key: row.identity_key.trim().to_lowercase(),
                    role,
                    since,
                });
            }
        }
    }
    Ok(out.into_values().collect())
}
