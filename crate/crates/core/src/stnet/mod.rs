//! Monthly social and technical networks and their metrics.
//!
//! The social network links developers who answer each other on the mailing
//! lists: a reply from B to a message by A adds weight to the directed edge
//! A→B, as does a thread-starting message from A addressed to B. The
//! technical network is bipartite, linking a developer to each source file
//! they committed to in the month.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::ingest::{Commit, Email, UNKNOWN_IDENTITY};
use crate::is_extract::IsCounts;
use crate::panel::{self, Outcome, PanelError, PanelSeries, ProjectSeries};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthlySocialNet {
    pub project_id: String,
    pub month_index: i32,
    pub nodes: BTreeSet<String>,
    pub edges: BTreeMap<(String, String), u32>,
}

impl MonthlySocialNet {
    pub fn new(project_id: impl Into<String>, month_index: i32) -> Self {
        Self {
            project_id: project_id.into(),
            month_index,
            ..Self::default()
        }
    }

    pub fn add_node(&mut self, id: &str) {
        if id != UNKNOWN_IDENTITY && !id.is_empty() {
            self.nodes.insert(id.to_string());
        }
    }

    /// Increment `src → dst`. Self-loops and unknown identities are ignored.
    pub fn add_edge(&mut self, src: &str, dst: &str) -> bool {
        let skip = |s: &str| s == UNKNOWN_IDENTITY || s.is_empty();
        if src == dst || skip(src) || skip(dst) {
            return false;
        }
        self.add_node(src);
        self.add_node(dst);
        *self.edges.entry((src.to_string(), dst.to_string())).or_insert(0) += 1;
        true
    }
}

pub fn build_social_net(project_id: &str, emails: &[Email], month_index: i32) -> MonthlySocialNet {
    let mut net = MonthlySocialNet::new(project_id, month_index);
    for e in emails.iter().filter(|e| e.month_index == month_index && !e.is_bot) {
        net.add_node(&e.sender);
        if let Some(parent) = &e.parent_sender {
            net.add_edge(parent, &e.sender);
        }
        for r in &e.direct_recipients {
            net.add_edge(&e.sender, r);
        }
    }
    net
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthlyTechNet {
    pub project_id: String,
    pub month_index: i32,
    pub dev_nodes: BTreeSet<String>,
    pub file_nodes: BTreeSet<String>,
    /// `(developer, file)` → number of commits.
    pub edges: BTreeMap<(String, String), u32>,
}

impl MonthlyTechNet {
    pub fn new(project_id: impl Into<String>, month_index: i32) -> Self {
        Self {
            project_id: project_id.into(),
            month_index,
            ..Self::default()
        }
    }

    pub fn add_edge(&mut self, dev: &str, file: &str) {
        self.dev_nodes.insert(dev.to_string());
        self.file_nodes.insert(file.to_string());
        *self.edges.entry((dev.to_string(), file.to_string())).or_insert(0) += 1;
    }
}

/// Drop a leading Subversion layout prefix: `trunk/`, `branches/<name>/` or
/// `tags/<name>/`.
pub fn normalize_svn_path(path: &str) -> &str {
    let p = path.trim_start_matches('/');
    if let Some(rest) = p.strip_prefix("trunk/") {
        return rest;
    }
    for head in ["branches/", "tags/"] {
        if let Some(rest) = p.strip_prefix(head) {
            if let Some(i) = rest.find('/') {
                return &rest[i + 1..];
            }
        }
    }
    p
}

pub fn build_tech_net(project_id: &str, commits: &[Commit], month_index: i32) -> MonthlyTechNet {
    let mut net = MonthlyTechNet::new(project_id, month_index);
    for c in commits.iter().filter(|c| c.month_index == month_index && !c.is_bot) {
        if c.author == UNKNOWN_IDENTITY {
            continue;
        }
        let files: BTreeSet<&str> = c.files.iter().map(|f| normalize_svn_path(f)).filter(|f| !f.is_empty()).collect();
        for f in files {
            net.add_edge(&c.author, f);
        }
    }
    net
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SocialMetrics {
    pub num_nodes: f64,
    pub graph_density: f64,
    pub avg_clustering_coef: f64,
    pub weighted_mean_degree: f64,
}

/// Local clustering from per-node degree and the number of edges among its
/// neighbours. Nodes of degree < 2 get 0.
fn clustering_ratio(degree: usize, closed: usize) -> f64 {
    if degree < 2 {
        0.0
    } else {
        closed as f64 / (degree * (degree - 1) / 2) as f64
    }
}

/// Undirected adjacency, one bitset row of `words` words per node.
struct BitAdjacency {
    words: usize,
    bits: Vec<u64>,
}

impl BitAdjacency {
    fn new(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> Self {
        let words = n.div_ceil(64);
        let mut bits = vec![0; n * words];
        for (a, b) in pairs.filter(|(a, b)| a != b) {
            bits[a * words + b / 64] |= 1 << (b % 64);
            bits[b * words + a / 64] |= 1 << (a % 64);
        }
        Self { words, bits }
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    fn clustering(&self, v: usize) -> f64 {
        let nv = self.row(v);
        let degree = nv.iter().map(|w| w.count_ones() as usize).sum();
        let mut twice = 0usize;
        for (i, &word) in nv.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let u = i * 64 + w.trailing_zeros() as usize;
                w &= w - 1;
                twice += self.row(u).iter().zip(nv).map(|(a, b)| (a & b).count_ones() as usize).sum::<usize>();
            }
        }
        clustering_ratio(degree, twice / 2)
    }
}

/// Local clustering of each node of the undirected simple graph on `0..n`
/// given by `pairs` (self-loops ignored).
pub fn local_clustering(n: usize, pairs: &[(usize, usize)]) -> Vec<f64> {
    let adj = BitAdjacency::new(n, pairs.iter().copied());
    (0..n).map(|v| adj.clustering(v)).collect()
}

/// Sum of local clustering over all nodes; graphs of up to 64 nodes use
/// one word per row on the stack.
fn clustering_sum(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> f64 {
    match n {
        0..=16 => clustering_sum_words::<16>(n, pairs),
        17..=64 => clustering_sum_words::<64>(n, pairs),
        _ => {
            let adj = BitAdjacency::new(n, pairs);
            (0..n).map(|v| adj.clustering(v)).sum()
        }
    }
}

fn clustering_sum_words<const N: usize>(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> f64 {
    let mut rows = [0u64; N];
    for (a, b) in pairs.filter(|(a, b)| a != b) {
        rows[a] |= 1 << b;
        rows[b] |= 1 << a;
    }
    let rows = &rows[..n];
    // each triangle shows up twice at each of its corners: once per incident edge
    let mut twice = [0u32; N];
    for (v, &nv) in rows.iter().enumerate() {
        let mut w = nv & !(u64::MAX >> (63 - v));
        while w != 0 {
            let u = w.trailing_zeros() as usize;
            let t = (rows[u] & nv).count_ones();
            twice[u] += t;
            twice[v] += t;
            w &= w - 1;
        }
    }
    let mut sum = 0.0;
    for (&nv, &t) in rows.iter().zip(&twice) {
        if t > 0 {
            sum += clustering_ratio(nv.count_ones() as usize, t as usize / 2);
        }
    }
    sum
}

/// Metrics of a directed weighted graph on nodes `0..n`. Edges are
/// `(src, dst, weight)` with distinct `(src, dst)` pairs and `src != dst`.
pub fn social_metrics_indexed(n: usize, edges: &[(usize, usize, u32)]) -> SocialMetrics {
    if n == 0 {
        return SocialMetrics::default();
    }
    let total_weight: u64 = edges.iter().map(|e| e.2 as u64).sum();
    let density = if n >= 2 {
        edges.len() as f64 / (n * (n - 1)) as f64
    } else {
        0.0
    };
    SocialMetrics {
        num_nodes: n as f64,
        graph_density: density,
        avg_clustering_coef: clustering_sum(n, edges.iter().map(|e| (e.0, e.1))) / n as f64,
        // each edge weight counts once as out-weight and once as in-weight
        weighted_mean_degree: 2.0 * total_weight as f64 / n as f64,
    }
}

pub fn social_metrics(net: &MonthlySocialNet) -> SocialMetrics {
    let index: BTreeMap<&str, usize> = net.nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let edges: Vec<(usize, usize, u32)> = net
        .edges
        .iter()
        .map(|((a, b), &w)| (index[a.as_str()], index[b.as_str()], w))
        .collect();
    social_metrics_indexed(net.nodes.len(), &edges)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TechMetrics {
    pub graph_density: f64,
    pub num_dev_nodes: f64,
    pub num_file_nodes: f64,
    pub num_file_per_dev: f64,
}

pub fn tech_metrics_counts(devs: usize, files: usize, edges: usize) -> TechMetrics {
    TechMetrics {
        graph_density: if devs > 0 && files > 0 {
            edges as f64 / (devs * files) as f64
        } else {
            0.0
        },
        num_dev_nodes: devs as f64,
        num_file_nodes: files as f64,
        num_file_per_dev: if devs > 0 { files as f64 / devs as f64 } else { 0.0 },
    }
}

pub fn tech_metrics(net: &MonthlyTechNet) -> TechMetrics {
    tech_metrics_counts(net.dev_nodes.len(), net.file_nodes.len(), net.edges.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub project_id: String,
    pub month_index: i32,
    pub social: SocialMetrics,
    pub tech: TechMetrics,
}

impl MetricRow {
    pub fn value(&self, var: &str) -> Option<f64> {
        Some(match var {
            panel::S_NUM_NODES => self.social.num_nodes,
            panel::S_GRAPH_DENSITY => self.social.graph_density,
            panel::S_AVG_CLUSTERING_COEF => self.social.avg_clustering_coef,
            panel::S_WEIGHTED_MEAN_DEGREE => self.social.weighted_mean_degree,
            panel::T_GRAPH_DENSITY => self.tech.graph_density,
            panel::T_NUM_DEV_NODES => self.tech.num_dev_nodes,
            panel::T_NUM_FILE_NODES => self.tech.num_file_nodes,
            panel::T_NUM_FILE_PER_DEV => self.tech.num_file_per_dev,
            _ => return None,
        })
    }

    fn is_active(&self) -> bool {
        self.social.num_nodes > 0.0 || self.tech.num_dev_nodes > 0.0
    }
}

/// One row per month (≥ 0) in which the project has any email or commit.
pub fn metric_rows(project_id: &str, emails: &[Email], commits: &[Commit]) -> Vec<MetricRow> {
    let months: BTreeSet<i32> = emails
        .iter()
        .map(|e| e.month_index)
        .chain(commits.iter().map(|c| c.month_index))
        .filter(|&m| m >= 0)
        .collect();
    months
        .into_iter()
        .map(|m| MetricRow {
            project_id: project_id.to_string(),
            month_index: m,
            social: social_metrics(&build_social_net(project_id, emails, m)),
            tech: tech_metrics(&build_tech_net(project_id, commits, m)),
        })
        .collect()
}

/// Dense per-project series from month 0 to the last active month. Months
/// without activity are zero-filled and flagged inactive. Every project in
/// `outcomes` appears, possibly with an empty series.
pub fn assemble_panel(
    rows: &[MetricRow],
    is_counts: &BTreeMap<(String, i32), IsCounts>,
    outcomes: &BTreeMap<String, Outcome>,
) -> Result<PanelSeries, PanelError> {
    let mut by_key: BTreeMap<(&str, i32), &MetricRow> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.month_index >= 0) {
        if let Some(prev) = by_key.insert((r.project_id.as_str(), r.month_index), r) {
            if prev != r {
                return Err(PanelError::Conflict {
                    project: r.project_id.clone(),
                    month: r.month_index,
                });
            }
        }
    }
    let mentioned = by_key.keys().map(|k| k.0).chain(is_counts.keys().map(|k| k.0.as_str()));
    for p in mentioned {
        if !outcomes.contains_key(p) {
            return Err(PanelError::UnknownProject(p.to_string()));
        }
    }
    let mut projects = Vec::new();
    for (pid, &outcome) in outcomes {
        let active = |m: i32| {
            by_key.get(&(pid.as_str(), m)).is_some_and(|r| r.is_active())
                || is_counts.get(&(pid.clone(), m)).is_some_and(|c| c.total() > 0)
        };
        let last = by_key
            .keys()
            .filter(|(p, _)| p == pid)
            .map(|&(_, m)| m)
            .chain(is_counts.keys().filter(|(p, _)| p == pid).map(|&(_, m)| m))
            .filter(|&m| m >= 0 && active(m))
            .max();
        let len = last.map_or(0, |m| m as usize + 1);
        let mut values: BTreeMap<String, Vec<f64>> =
            panel::all_vars().map(|v| (v.to_string(), vec![0.0; len])).collect();
        let mut inactive = vec![true; len];
        for m in 0..len {
            let mi = m as i32;
            inactive[m] = !active(mi);
            if let Some(r) = by_key.get(&(pid.as_str(), mi)) {
                for v in panel::ST_VARS {
                    values.get_mut(v).unwrap()[m] = r.value(v).unwrap();
                }
            }
            if let Some(c) = is_counts.get(&(pid.clone(), mi)) {
                values.get_mut(panel::NUM_IS_MENTOR).unwrap()[m] = c.mentor as f64;
                values.get_mut(panel::NUM_IS_COMMITTER).unwrap()[m] = c.committer as f64;
                values.get_mut(panel::NUM_IS_CONTRIBUTOR).unwrap()[m] = c.contributor as f64;
            }
        }
        projects.push(ProjectSeries {
            project_id: pid.clone(),
            outcome,
            inactive,
            values,
        });
    }
    PanelSeries::new(projects)
}

pub const METRICS_HEADER: [&str; 14] = [
    "project",
    "month_index",
    panel::S_NUM_NODES,
    panel::S_GRAPH_DENSITY,
    panel::S_AVG_CLUSTERING_COEF,
    panel::S_WEIGHTED_MEAN_DEGREE,
    panel::T_GRAPH_DENSITY,
    panel::T_NUM_DEV_NODES,
    panel::T_NUM_FILE_NODES,
    panel::T_NUM_FILE_PER_DEV,
    panel::NUM_IS_MENTOR,
    panel::NUM_IS_COMMITTER,
    panel::NUM_IS_CONTRIBUTOR,
    "inactive_flag",
];

/// Write the panel as `metrics.csv`. Masked (`NaN`) cells are left empty.
pub fn write_metrics_csv<W: Write>(panel: &PanelSeries, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(METRICS_HEADER)?;
    for p in panel.projects() {
        for m in 0..p.len() {
            let mut rec = vec![p.project_id.clone(), m.to_string()];
            for v in &METRICS_HEADER[2..13] {
                let x = p.get(v).map_or(f64::NAN, |s| s[m]);
                rec.push(if x.is_nan() { String::new() } else { x.to_string() });
            }
            rec.push(u8::from(p.inactive[m]).to_string());
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Read `metrics.csv` back into a panel; projects missing from `outcomes`
/// are rejected. Lines starting with `#` are skipped.
pub fn read_metrics_csv<R: Read>(r: R, outcomes: &BTreeMap<String, Outcome>) -> Result<PanelSeries, MetricsCsvError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != METRICS_HEADER {
        return Err(MetricsCsvError::Header(header));
    }
    let mut rows: BTreeMap<String, Vec<(usize, Vec<f64>, bool)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| MetricsCsvError::Row { line, message };
        let month: usize = rec[1].parse().map_err(|e| bad(format!("month_index: {e}")))?;
        let vals = (2..13)
            .map(|j| {
                if rec[j].is_empty() {
                    Ok(f64::NAN)
                } else {
                    rec[j].parse::<f64>().map_err(|e| bad(format!("{}: {e}", METRICS_HEADER[j])))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let flag = match &rec[13] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("inactive_flag {other:?}"))),
        };
        rows.entry(rec[0].to_string()).or_default().push((month, vals, flag));
    }
    let mut projects = Vec::new();
    for (pid, &outcome) in outcomes {
        let mut r = rows.remove(pid).unwrap_or_default();
        r.sort_by_key(|x| x.0);
        if r.iter().enumerate().any(|(i, x)| x.0 != i) {
            return Err(MetricsCsvError::Row {
                line: 0,
                message: format!("{pid}: months are not contiguous from 0"),
            });
        }
        let values = METRICS_HEADER[2..13]
            .iter()
            .enumerate()
            .map(|(j, v)| (v.to_string(), r.iter().map(|x| x.1[j]).collect()))
            .collect();
        projects.push(ProjectSeries {
            project_id: pid.clone(),
            outcome,
            inactive: r.iter().map(|x| x.2).collect(),
            values,
        });
    }
    if let Some(pid) = rows.keys().next() {
        return Err(PanelError::UnknownProject(pid.clone()).into());
    }
    Ok(PanelSeries::new(projects)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn email(sender: &str, parent: Option<&str>, month: i32) -> Email {
        Email {
            message_id: format!("<{sender}-{month}-{}>", parent.unwrap_or("")),
            project_id: "p".into(),
            list: "dev".into(),
            sent_at: Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap(),
            month_index: month,
            sender: sender.into(),
            in_reply_to: None,
            references: vec![],
            parent_id: parent.map(|p| format!("<{p}>")),
            parent_sender: parent.map(String::from),
            thread_id: String::new(),
            recipients: vec![],
            direct_recipients: vec![],
            subject: String::new(),
            body: String::new(),
            is_bot: false,
            sentences: vec![],
        }
    }

    fn commit(author: &str, files: &[&str], month: i32) -> Commit {
        Commit {
            commit_id: format!("{author}{files:?}"),
            project_id: "p".into(),
            authored_at: Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap(),
            month_index: month,
            author: author.into(),
            files: files.iter().map(|s| s.to_string()).collect(),
            is_bot: false,
        }
    }

    #[test]
    fn clustering_across_word_boundaries() {
        // triangle 0-63-64 plus a pendant 130 on node 0
        let c = local_clustering(131, &[(0, 63), (63, 64), (64, 0), (0, 130), (5, 5)]);
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!((c[63], c[64], c[130], c[5]), (1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn empty_social_net() {
        let net = build_social_net("p", &[], 0);
        assert_eq!(social_metrics(&net), SocialMetrics::default());
    }

    #[test]
    fn reply_edges() {
        let emails = vec![
            email("a", None, 0),
            email("b", Some("a"), 0),
            email("b", Some("a"), 0),
            email("c", Some("b"), 0),
            email("a", Some("a"), 0),
            email("z", Some("a"), 1),
        ];
        let net = build_social_net("p", &emails, 0);
        assert_eq!(net.edges.len(), 2);
        assert_eq!(net.edges[&("a".into(), "b".into())], 2);
        assert_eq!(net.edges[&("b".into(), "c".into())], 1);
        let m = social_metrics(&net);
        assert_eq!(m.num_nodes, 3.0);
        assert!((m.graph_density - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.weighted_mean_degree, 2.0 * 3.0 / 3.0);
    }

    #[test]
    fn direct_address_and_isolates() {
        let mut e = email("a", None, 0);
        e.direct_recipients = vec!["b".into()];
        let lone = email("d", None, 0);
        let net = build_social_net("p", &[e, lone], 0);
        assert_eq!(net.nodes.len(), 3);
        assert_eq!(net.edges[&("a".into(), "b".into())], 1);
    }

    #[test]
    fn clustering_examples() {
        let tri = [(0, 1, 1), (1, 0, 1), (1, 2, 1), (2, 1, 1), (0, 2, 1), (2, 0, 1)];
        assert_eq!(social_metrics_indexed(3, &tri).avg_clustering_coef, 1.0);
        let path = [(0, 1, 1), (1, 2, 1)];
        assert_eq!(social_metrics_indexed(3, &path).avg_clustering_coef, 0.0);
        let single = social_metrics_indexed(2, &[(0, 1, 2)]);
        assert_eq!(single.weighted_mean_degree, 2.0);
    }

    #[test]
    fn tech_examples() {
        let net = build_tech_net("p", &[commit("a", &["x.java", "y.java", "z.java"], 0)], 0);
        assert_eq!(net.edges.len(), 3);
        assert_eq!(tech_metrics(&net).graph_density, 1.0);
        assert_eq!(tech_metrics(&build_tech_net("p", &[], 0)), TechMetrics::default());
        let four: Vec<Commit> = (0..4).map(|_| commit("a", &["f.c"], 0)).collect();
        assert_eq!(build_tech_net("p", &four, 0).edges[&("a".into(), "f.c".into())], 4);
        let t = tech_metrics_counts(2, 2, 2);
        assert_eq!(t.graph_density, 0.5);
        assert_eq!(tech_metrics_counts(1, 38, 38).num_file_per_dev, 38.0);
        let empty_files = build_tech_net("p", &[commit("a", &[], 0)], 0);
        assert!(empty_files.dev_nodes.is_empty());
    }

    #[test]
    fn svn_prefixes() {
        assert_eq!(normalize_svn_path("trunk/src/A.java"), "src/A.java");
        assert_eq!(normalize_svn_path("/branches/1.x/src/A.java"), "src/A.java");
        assert_eq!(normalize_svn_path("tags/v1/src/A.java"), "src/A.java");
        assert_eq!(normalize_svn_path("src/trunk/A.java"), "src/trunk/A.java");
        let net = build_tech_net("p", &[commit("a", &["trunk/A.java", "branches/b/A.java"], 0)], 0);
        assert_eq!(net.file_nodes.len(), 1);
    }

    fn outcomes(ids: &[&str]) -> BTreeMap<String, Outcome> {
        ids.iter().map(|s| (s.to_string(), Outcome::Graduated)).collect()
    }

    #[test]
    fn panel_fills_gaps() {
        let emails: Vec<Email> = [0, 1, 3].iter().map(|&m| email("a", None, m)).collect();
        let rows = metric_rows("p", &emails, &[]);
        let panel = assemble_panel(&rows, &BTreeMap::new(), &outcomes(&["p", "q"])).unwrap();
        let p = panel.project("p").unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.inactive, vec![false, false, true, false]);
        assert_eq!(p.get(panel::S_NUM_NODES).unwrap(), &[1.0, 1.0, 0.0, 1.0]);
        assert!(panel.project("q").unwrap().is_empty());
    }

    #[test]
    fn panel_conflicts_and_counts() {
        let emails = vec![email("a", None, 0)];
        let mut rows = metric_rows("p", &emails, &[]);
        rows.push(rows[0].clone());
        assert!(assemble_panel(&rows, &BTreeMap::new(), &outcomes(&["p"])).is_ok());
        let mut other = rows[0].clone();
        other.social.num_nodes = 5.0;
        rows.push(other);
        assert!(matches!(
            assemble_panel(&rows, &BTreeMap::new(), &outcomes(&["p"])),
            Err(PanelError::Conflict { .. })
        ));
        let counts: BTreeMap<(String, i32), IsCounts> = [(
            ("p".to_string(), 2),
            IsCounts {
                mentor: 3,
                committer: 0,
                contributor: 1,
            },
        )]
        .into();
        let panel = assemble_panel(&rows[..1], &counts, &outcomes(&["p"])).unwrap();
        let p = panel.project("p").unwrap();
        assert_eq!(p.inactive, vec![false, true, false]);
        assert_eq!(p.get(panel::NUM_IS_MENTOR).unwrap(), &[0.0, 0.0, 3.0]);
        assert!(assemble_panel(&rows[..1], &counts, &outcomes(&["x"])).is_err());
    }

    #[test]
    fn metrics_csv_round_trip() {
        let emails: Vec<Email> = vec![email("a", None, 0), email("b", Some("a"), 2)];
        let rows = metric_rows("p", &emails, &[commit("a", &["x.rs"], 1)]);
        let oc = outcomes(&["p"]);
        let mut panel = assemble_panel(&rows, &BTreeMap::new(), &oc).unwrap();
        panel.projects_mut()[0].values.get_mut(panel::S_NUM_NODES).unwrap()[1] = f64::NAN;
        let mut buf = Vec::new();
        write_metrics_csv(&panel, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("project,month_index,s_num_nodes,"));
        assert!(text.lines().next().unwrap().ends_with("num_IS_contributor,inactive_flag"));
        let back = read_metrics_csv(&buf[..], &oc).unwrap();
        let (a, b) = (&panel.projects()[0], &back.projects()[0]);
        assert_eq!(a.inactive, b.inactive);
        for (k, v) in &a.values {
            let w = &b.values[k];
            assert!(v.iter().zip(w).all(|(x, y)| x == y || (x.is_nan() && y.is_nan())));
        }
    }
}
