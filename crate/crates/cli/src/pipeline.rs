//! The `ingest` and `analyze` stages and their on-disk layout.
//!
//! ```text
//! <output_dir>/
//!   manifest.json
//!   ingest/ingest_stats.json
//!   ingest/<project>/emails.jsonl, commits.jsonl
//!   analyze/metrics.csv, is_counts.csv, predictions.jsonl, classifier_eval.json
//!   analyze/panel_summary.json, group_tests.csv, stationarity.csv, granger.csv, granger_edges.json
//!   analyze/topics.json, topic_volumes.csv
//!   analyze/plots/<variable>.svg, analyze/plots/topic_evolution.svg
//!   report.md
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use stsgov_core::ingest::{
    ingest_project, load_manifests, BotRules, Commit, Email, IdentityMap, IngestOptions, IngestStats, ProjectManifest,
    SourceFilter,
};
use stsgov_core::is_extract::{
    self, aggregate_predictions, apply_gold, assign_predictions, classify, count_is_by_role, evaluate,
    oversample_training, parse_policies, read_gold_jsonl, segment_emails, split_threads, train_baseline,
    ClassifierHandle, EvalReport, ExternalClient, IsCounts,
};
use stsgov_core::panel::{self, summarize, Outcome, PanelSeries, VariableSummary};
use stsgov_core::stats::{
    edge_list, group_tests, run_grid, stationarity_table, trim_outliers, GrangerEdge, GridConfig, GridRow,
    GroupTestRow, StationarityRow,
};
use stsgov_core::stnet::{assemble_panel, metric_rows, write_metrics_csv, MetricRow};
use stsgov_core::topics::{
    coherence_umass, fit_lda, preprocess_is_corpus, select_k, topic_volumes, DocMeta, LdaConfig, TopicVolume,
};

use crate::config::{ClassifierConfig, RunConfig};
use crate::manifest::{digest_tree, now, RunManifest, StageRecord};
use crate::plot::{line_chart, small_multiples, Line, GRADUATED_COLOR, RETIRED_COLOR};

pub const INGEST_DIR: &str = "ingest";
pub const ANALYZE_DIR: &str = "analyze";

pub fn ingest_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join(INGEST_DIR)
}

pub fn analyze_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join(ANALYZE_DIR)
}

/// Run `f` with the stage name attached to any error.
pub fn stage<T>(name: &str, f: impl FnOnce() -> anyhow::Result<T>) -> anyhow::Result<T> {
    info!("stage {name}: start");
    let r = f().with_context(|| format!("stage {name} failed"));
    if r.is_ok() {
        info!("stage {name}: done");
    }
    r
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> anyhow::Result<usize> {
    let mut w = BufWriter::new(fs::File::create(path).with_context(|| path.display().to_string())?);
    let mut n = 0;
    for it in items {
        serde_json::to_writer(&mut w, &it)?;
        w.write_all(b"\n")?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    if !path.exists() {
        bail!("missing upstream artifact {}", path.display());
    }
    let r = BufReader::new(fs::File::open(path).with_context(|| path.display().to_string())?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| path.display().to_string())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    if !path.exists() {
        bail!("missing upstream artifact {}", path.display());
    }
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    serde_json::from_str(&text).with_context(|| path.display().to_string())
}

/// Fresh scratch directory next to `final_dir`.
fn scratch_dir(final_dir: &Path) -> anyhow::Result<PathBuf> {
    let tmp = final_dir.with_extension("tmp");
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    Ok(tmp)
}

/// Replace `final_dir` with the finished scratch directory.
fn publish(tmp: &Path, final_dir: &Path) -> anyhow::Result<()> {
    if final_dir.exists() {
        fs::remove_dir_all(final_dir)?;
    }
    fs::rename(tmp, final_dir).with_context(|| format!("moving {} into place", tmp.display()))
}

fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

fn opt_f(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

pub fn ingest_options(cfg: &RunConfig) -> anyhow::Result<IngestOptions> {
    let mut opts = IngestOptions::default();
    if let Some(p) = &cfg.bot_rules_file {
        opts.bot_rules.extend(BotRules::from_file(p)?);
    }
    if let Some(p) = &cfg.source_extensions_file {
        opts.source_filter = SourceFilter::from_file(p)?;
    }
    if let Some(p) = cfg.aliases_path() {
        let mut ids = IdentityMap::new();
        ids.load_aliases(&p)?;
        opts.identities = ids;
    }
    Ok(opts)
}

pub fn load_project_manifests(cfg: &RunConfig) -> anyhow::Result<Vec<ProjectManifest>> {
    Ok(load_manifests(&cfg.projects_path(), cfg.roster_path().as_deref())?)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub config_hash: String,
    pub seed: u64,
    pub projects: BTreeMap<String, IngestStats>,
    pub total: IngestStats,
    pub bot_email_ratio: f64,
    pub bot_commit_ratio: f64,
}

pub fn cmd_ingest(cfg: &RunConfig) -> anyhow::Result<IngestReport> {
    let started = now();
    let (report, inputs) = stage("ingest", || {
        let manifests = load_project_manifests(cfg)?;
        let opts = ingest_options(cfg)?;
        let corpora = manifests
            .par_iter()
            .map(|m| ingest_project(&cfg.corpus_root.join(&m.project_id), m, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        let final_dir = ingest_dir(cfg);
        fs::create_dir_all(&cfg.output_dir)?;
        let tmp = scratch_dir(&final_dir)?;
        let mut report = IngestReport {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            ..Default::default()
        };
        let write = || -> anyhow::Result<()> {
            for c in &corpora {
                let dir = tmp.join(&c.manifest.project_id);
                fs::create_dir_all(&dir)?;
                write_jsonl(&dir.join("emails.jsonl"), &c.emails)?;
                write_jsonl(&dir.join("commits.jsonl"), &c.commits)?;
            }
            Ok(())
        };
        if let Err(e) = write() {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
        for c in &corpora {
            report.total.add(&c.stats);
            report.projects.insert(c.manifest.project_id.clone(), c.stats.clone());
        }
        report.bot_email_ratio = report.total.bot_email_ratio();
        report.bot_commit_ratio = report.total.bot_commit_ratio();
        write_json(&tmp.join("ingest_stats.json"), &report)?;
        publish(&tmp, &final_dir)?;

        let mut roots = vec![cfg.projects_path()];
        roots.extend(cfg.roster_path());
        roots.extend(manifests.iter().map(|m| cfg.corpus_root.join(&m.project_id)));
        Ok((report, digest_tree(&cfg.corpus_root, &roots)?))
    })?;
    info!(
        "ingested {} projects: {} emails kept, {} bot emails ({:.1}%), {} commits kept",
        report.projects.len(),
        report.total.emails_retained,
        report.total.emails_bot,
        100.0 * report.bot_email_ratio,
        report.total.commits_retained
    );
    let mut counts = BTreeMap::new();
    counts.insert("projects".into(), report.projects.len() as u64);
    counts.insert("emails_retained".into(), report.total.emails_retained as u64);
    counts.insert("emails_bot".into(), report.total.emails_bot as u64);
    counts.insert("commits_retained".into(), report.total.commits_retained as u64);
    record_stage(cfg, "ingest", started, inputs, &[ingest_dir(cfg)], counts)?;
    Ok(report)
}

/// Store the stage's digests and counts in the run manifest.
pub fn record_stage(
    cfg: &RunConfig,
    name: &str,
    started_at: String,
    inputs: BTreeMap<String, String>,
    outputs: &[PathBuf],
    counts: BTreeMap<String, u64>,
) -> anyhow::Result<()> {
    let mut m = RunManifest::load_or_new(&cfg.output_dir, &cfg.hash(), cfg.seed)?;
    m.stages.insert(
        name.to_string(),
        StageRecord {
            started_at,
            finished_at: now(),
            inputs,
            outputs: digest_tree(&cfg.output_dir, outputs)?,
            counts,
        },
    );
    m.save(&cfg.output_dir)
}

/// Ingested records of one project.
#[derive(Debug, Clone)]
pub struct LoadedProject {
    pub manifest: ProjectManifest,
    pub emails: Vec<Email>,
    pub commits: Vec<Commit>,
}

pub fn load_ingested(cfg: &RunConfig) -> anyhow::Result<Vec<LoadedProject>> {
    let dir = ingest_dir(cfg);
    if !dir.exists() {
        bail!("missing upstream artifact {} (run `ingest` first)", dir.display());
    }
    load_project_manifests(cfg)?
        .into_iter()
        .map(|m| {
            let pdir = dir.join(&m.project_id);
            Ok(LoadedProject {
                emails: read_jsonl(&pdir.join("emails.jsonl"))?,
                commits: read_jsonl(&pdir.join("commits.jsonl"))?,
                manifest: m,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEval {
    pub config_hash: String,
    pub seed: u64,
    pub classifier: String,
    pub annotated_sentences: usize,
    pub train_threads: usize,
    pub test_threads: usize,
    pub train_sentences: usize,
    pub test_sentences: usize,
    /// Held-out scores; absent without annotated test threads.
    pub report: Option<EvalReport>,
}

fn thread_key(e: &Email) -> String {
    format!("{}\u{1f}{}", e.project_id, e.thread_id)
}

/// Label every sentence of `emails` and score the held-out annotated
/// threads.
pub fn detect_statements(cfg: &RunConfig, emails: &mut [Email]) -> anyhow::Result<ClassifierEval> {
    let annotated = match cfg.gold_path() {
        Some(p) => apply_gold(emails, &read_gold_jsonl(&p)?),
        None => 0,
    };
    let is_annotated = |e: &Email| e.sentences.iter().any(|s| s.gold_label.is_some());
    let keys: Vec<String> = emails.iter().filter(|e| is_annotated(e)).map(thread_key).collect();
    let split = split_threads(keys.iter().map(String::as_str), cfg.test_fraction, cfg.seed);
    let count_sentences = |set: &BTreeSet<String>| -> usize {
        emails
            .iter()
            .filter(|e| set.contains(&thread_key(e)))
            .flat_map(|e| &e.sentences)
            .filter(|s| s.gold_label.is_some())
            .count()
    };
    let mut eval = ClassifierEval {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        classifier: String::new(),
        annotated_sentences: annotated,
        train_threads: split.train.len(),
        test_threads: split.test.len(),
        train_sentences: count_sentences(&split.train),
        test_sentences: count_sentences(&split.test),
        report: None,
    };

    let handle = match &cfg.classifier {
        ClassifierConfig::Baseline => {
            let train_emails: Vec<&Email> = emails
                .iter()
                .filter(|e| is_annotated(e) && split.train.contains(&thread_key(e)))
                .collect();
            let mut training = segment_emails(train_emails, cfg.token_budget);
            if let Some(p) = &cfg.policies_file {
                let text = fs::read_to_string(p).with_context(|| p.display().to_string())?;
                training.extend(parse_policies(&text, is_extract::tokenize::default_tokenizer()));
            }
            if training.is_empty() {
                bail!("no annotated sentences to train the baseline classifier (gold file or policies file needed)");
            }
            let over = oversample_training(&training, cfg.seed)?;
            ClassifierHandle::Baseline(train_baseline(&over, cfg.seed)?)
        }
        ClassifierConfig::External { endpoint } => {
            let client = ExternalClient::new(endpoint.clone());
            client.retokenize(emails)?;
            ClassifierHandle::External(client)
        }
    };
    eval.classifier = handle.kind().to_string();

    let mut segments = segment_emails(emails.iter(), cfg.token_budget);
    classify(&handle, &mut segments)?;
    let labels = aggregate_predictions(&segments)?;
    assign_predictions(emails, &labels)?;

    let (mut gold, mut pred) = (Vec::new(), Vec::new());
    for e in emails.iter().filter(|e| split.test.contains(&thread_key(e))) {
        for s in &e.sentences {
            if let (Some(g), Some(p)) = (s.gold_label, s.predicted_label) {
                gold.push(g);
                pred.push(p);
            }
        }
    }
    if !gold.is_empty() {
        eval.report = Some(evaluate(&gold, &pred)?);
    }
    Ok(eval)
}

/// Summary statistics with empty groups written as nulls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
}

impl From<&VariableSummary> for SummaryStats {
    fn from(s: &VariableSummary) -> Self {
        let f = |x: f64| x.is_finite().then_some(x);
        Self {
            n: s.n,
            mean: f(s.mean),
            sd: f(s.sd),
            min: f(s.min),
            q1: f(s.q1),
            median: f(s.median),
            q3: f(s.q3),
            max: f(s.max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variable: String,
    pub with_inactive: SummaryStats,
    pub without_inactive: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub config_hash: String,
    pub seed: u64,
    pub trim_fraction: f64,
    /// `all`, `graduated`, `retired`.
    pub groups: BTreeMap<String, Vec<SummaryRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub config_hash: String,
    pub seed: u64,
    pub lag: usize,
    pub alpha: f64,
    pub tests: usize,
    pub tested: usize,
    pub graduated: Vec<GrangerEdge>,
    pub retired: Vec<GrangerEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEntry {
    pub topic_id: usize,
    pub label: Option<String>,
    pub top_words: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicsReport {
    pub config_hash: String,
    pub seed: u64,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub documents: usize,
    pub vocabulary: usize,
    /// (K, mean UMass coherence).
    pub coherence: Vec<(usize, f64)>,
    pub selected_coherence: f64,
    pub topics: Vec<TopicEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeSummary {
    pub projects: usize,
    pub emails: usize,
    pub sentences: usize,
    pub statements: usize,
    pub tests: usize,
    pub significant: usize,
    pub topics: usize,
}

/// First line of every CSV artifact.
pub fn csv_stamp(cfg: &RunConfig) -> String {
    format!("# config_hash={} seed={}\n", cfg.hash(), cfg.seed)
}

fn stamped_file(path: &Path, stamp: &str) -> anyhow::Result<BufWriter<fs::File>> {
    let mut f = BufWriter::new(fs::File::create(path).with_context(|| path.display().to_string())?);
    f.write_all(stamp.as_bytes())?;
    Ok(f)
}

fn write_csv(
    path: &Path,
    stamp: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(stamped_file(path, stamp)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub const GRANGER_HEADER: [&str; 11] = [
    "group", "x_var", "y_var", "lag", "n_projects", "W_bar", "Z_bar", "raw_p", "adjusted_p", "significant", "note",
];

fn granger_rows(rows: &[GridRow], lag: usize) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let res = r.result.as_ref();
            vec![
                r.group.to_string(),
                r.x_var.clone(),
                r.y_var.clone(),
                lag.to_string(),
                res.map(|g| g.n_projects_used.to_string()).unwrap_or_default(),
                opt_f(res.map(|g| g.w_bar)),
                opt_f(res.map(|g| g.z_bar)),
                opt_f(res.map(|g| g.p_value)),
                opt_f(r.adjusted.map(|a| a.adjusted_p)),
                r.adjusted.is_some_and(|a| a.significant).to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

fn stationarity_rows(rows: &[StationarityRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.project_id.clone(),
                r.variable.clone(),
                r.n.to_string(),
                opt_f(r.statistic),
                opt_f(r.p_value),
                r.stationary.map(|s| s.to_string()).unwrap_or_default(),
            ]
        })
        .collect()
}

fn group_test_rows(rows: &[GroupTestRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.variable.clone(),
                r.n_graduated.to_string(),
                r.n_retired.to_string(),
                fmt_f(r.mean_graduated),
                fmt_f(r.mean_retired),
                opt_f(r.u),
                opt_f(r.p_value),
                r.exact.map(|e| e.to_string()).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Group mean ± standard error per month over active, unmasked cells.
fn group_series(panel: &PanelSeries, var: &str, group: Outcome) -> Vec<(f64, f64, Option<f64>)> {
    let len = panel.group(group).map(|p| p.len()).max().unwrap_or(0);
    (0..len)
        .filter_map(|m| {
            let vals: Vec<f64> = panel
                .group(group)
                .filter(|p| m < p.len() && !p.inactive[m])
                .filter_map(|p| p.get(var).map(|v| v[m]))
                .filter(|x| !x.is_nan())
                .collect();
            if vals.is_empty() {
                return None;
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let se = (vals.len() >= 2).then(|| {
                let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            });
            Some((m as f64, mean, se))
        })
        .collect()
}

fn group_lines(points: impl Fn(Outcome) -> Vec<(f64, f64, Option<f64>)>) -> Vec<Line> {
    Outcome::ALL
        .iter()
        .map(|&g| Line {
            label: g.to_string(),
            color: match g {
                Outcome::Graduated => GRADUATED_COLOR,
                Outcome::Retired => RETIRED_COLOR,
            }
            .to_string(),
            points: points(g),
        })
        .filter(|l| !l.points.is_empty())
        .collect()
}

pub fn cmd_analyze(cfg: &RunConfig) -> anyhow::Result<AnalyzeSummary> {
    let started = now();
    let final_dir = analyze_dir(cfg);
    let tmp = scratch_dir(&final_dir)?;
    let result = analyze_into(cfg, &tmp);
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
    };
    publish(&tmp, &final_dir)?;
    let mut inputs = digest_tree(&cfg.output_dir, &[ingest_dir(cfg)])?;
    if let Some(g) = cfg.gold_path() {
        inputs.extend(digest_tree(&cfg.corpus_root, &[g])?);
    }
    let counts = BTreeMap::from([
        ("emails".to_string(), summary.emails as u64),
        ("statements".to_string(), summary.statements as u64),
        ("tests".to_string(), summary.tests as u64),
        ("significant".to_string(), summary.significant as u64),
        ("topics".to_string(), summary.topics as u64),
    ]);
    record_stage(cfg, "analyze", started, inputs, &[final_dir], counts)?;
    Ok(summary)
}

fn analyze_into(cfg: &RunConfig, out: &Path) -> anyhow::Result<AnalyzeSummary> {
    let hash = cfg.hash();
    let stamp = csv_stamp(cfg);
    let meta = format!("config_hash={hash} seed={}", cfg.seed);
    let projects = stage("load", || load_ingested(cfg))?;
    let manifests: BTreeMap<String, ProjectManifest> = projects
        .iter()
        .map(|p| (p.manifest.project_id.clone(), p.manifest.clone()))
        .collect();
    let outcomes: BTreeMap<String, Outcome> = manifests.iter().map(|(k, m)| (k.clone(), m.outcome)).collect();
    let mut summary = AnalyzeSummary {
        projects: projects.len(),
        ..Default::default()
    };

    // institutional statements
    let mut emails: Vec<Email> = projects.iter().flat_map(|p| p.emails.iter().cloned()).collect();
    let eval = stage("statements", || {
        let eval = detect_statements(cfg, &mut emails)?;
        write_json(&out.join("classifier_eval.json"), &eval)?;
        let f = fs::File::create(out.join("predictions.jsonl"))?;
        let mut w = BufWriter::new(f);
        is_extract::write_predictions_jsonl(&emails, &mut w)?;
        w.flush()?;
        Ok(eval)
    })?;
    if let Some(r) = &eval.report {
        info!("classifier held-out F1 {:.3} (precision {:.3}, recall {:.3})", r.f1, r.precision, r.recall);
    }
    summary.emails = emails.len();
    summary.sentences = emails.iter().map(|e| e.sentences.len()).sum();
    summary.statements = emails
        .iter()
        .flat_map(|e| &e.sentences)
        .filter(|s| s.predicted_label == Some(true))
        .count();

    let mut is_counts: BTreeMap<(String, i32), IsCounts> = BTreeMap::new();
    for (pid, m) in &manifests {
        let own: Vec<Email> = emails.iter().filter(|e| &e.project_id == pid).cloned().collect();
        for (month, c) in count_is_by_role(&own, m) {
            is_counts.insert((pid.clone(), month), c);
        }
    }
    write_csv(
        &out.join("is_counts.csv"),
        &stamp,
        &["project", "month_index", "mentor", "committer", "contributor"],
        is_counts.iter().map(|((p, m), c)| {
            vec![
                p.clone(),
                m.to_string(),
                c.mentor.to_string(),
                c.committer.to_string(),
                c.contributor.to_string(),
            ]
        }),
    )?;

    // networks and panel
    let panel = stage("networks", || {
        let rows: Vec<MetricRow> = projects
            .par_iter()
            .flat_map_iter(|p| metric_rows(&p.manifest.project_id, &p.emails, &p.commits))
            .collect();
        let panel = assemble_panel(&rows, &is_counts, &outcomes)?;
        write_metrics_csv(&panel, stamped_file(&out.join("metrics.csv"), &stamp)?)?;
        Ok(panel)
    })?;

    // statistics
    let all_vars: Vec<String> = panel::all_vars().map(String::from).collect();
    let trimmed = stage("stats", || {
        let trimmed = trim_outliers(&panel, cfg.trim_fraction)?;
        let mut groups = BTreeMap::new();
        for (name, g) in [
            ("all", None),
            ("graduated", Some(Outcome::Graduated)),
            ("retired", Some(Outcome::Retired)),
        ] {
            let rows = summarize(&trimmed, g)
                .iter()
                .map(|(w, wo)| SummaryRow {
                    variable: w.variable.clone(),
                    with_inactive: w.into(),
                    without_inactive: wo.into(),
                })
                .collect();
            groups.insert(name.to_string(), rows);
        }
        write_json(
            &out.join("panel_summary.json"),
            &PanelSummary {
                config_hash: hash.clone(),
                seed: cfg.seed,
                trim_fraction: cfg.trim_fraction,
                groups,
            },
        )?;
        write_csv(
            &out.join("group_tests.csv"),
            &stamp,
            &[
                "variable",
                "n_graduated",
                "n_retired",
                "mean_graduated",
                "mean_retired",
                "u",
                "p_value",
                "exact",
            ],
            group_test_rows(&group_tests(&trimmed, &all_vars, false)),
        )?;

        let grid = GridConfig {
            is_vars: panel::IS_VARS.iter().map(|s| s.to_string()).collect(),
            st_vars: cfg.grid_st_vars.clone(),
            lag: cfg.granger_lag,
            alpha: cfg.granger_alpha,
            small_sample: cfg.granger_small_sample,
            policy: cfg.nonstationary,
            adf_alpha: cfg.adf_alpha,
        };
        let vars: Vec<String> = grid.is_vars.iter().chain(&grid.st_vars).cloned().collect();
        write_csv(
            &out.join("stationarity.csv"),
            &stamp,
            &["project", "variable", "n", "adf_statistic", "p_value", "stationary"],
            stationarity_rows(&stationarity_table(&panel, &vars, cfg.adf_alpha)),
        )?;
        let rows = run_grid(&panel, &grid)?;
        write_csv(&out.join("granger.csv"),&stamp, &GRANGER_HEADER, granger_rows(&rows, cfg.granger_lag))?;
        let edges = EdgeReport {
            config_hash: hash.clone(),
            seed: cfg.seed,
            lag: cfg.granger_lag,
            alpha: cfg.granger_alpha,
            tests: rows.len(),
            tested: rows.iter().filter(|r| r.result.is_some()).count(),
            graduated: edge_list(&rows, Outcome::Graduated),
            retired: edge_list(&rows, Outcome::Retired),
        };
        summary.tests = edges.tested;
        summary.significant = rows.iter().filter(|r| r.adjusted.is_some_and(|a| a.significant)).count();
        write_json(&out.join("granger_edges.json"), &edges)?;
        Ok(trimmed)
    })?;

    // topics
    let volumes = stage("topics", || {
        let mut texts = Vec::new();
        let mut meta_rows = Vec::new();
        for e in &emails {
            for s in e.sentences.iter().filter(|s| s.predicted_label == Some(true)) {
                texts.push(s.text.as_str());
                meta_rows.push(DocMeta {
                    project_id: e.project_id.clone(),
                    month_index: e.month_index,
                    group: outcomes[&e.project_id],
                });
            }
        }
        let docs = preprocess_is_corpus(&texts)?;
        let grid: Vec<usize> = cfg.lda_grid.iter().copied().filter(|&k| k <= docs.len()).collect();
        if grid.len() < cfg.lda_grid.len() {
            warn!("topic counts above the {} documents dropped from the search grid", docs.len());
        }
        if grid.is_empty() {
            bail!("too few statement documents ({}) for the topic grid", docs.len());
        }
        let lda = LdaConfig {
            alpha: cfg.lda_alpha,
            beta: cfg.lda_beta,
            iterations: cfg.lda_iterations,
        };
        let seeds: Vec<u64> = (0..cfg.lda_restarts as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
        let sel = select_k(&docs, &grid, &seeds, &lda, cfg.coherence_top_n)?;
        let model = fit_lda(&docs, sel.best_k, &lda, cfg.seed)?;
        let coherence = coherence_umass(&model, &docs, cfg.coherence_top_n);
        let report = TopicsReport {
            config_hash: hash.clone(),
            seed: cfg.seed,
            k: model.k,
            alpha: model.alpha,
            beta: model.beta,
            iterations: model.iterations,
            documents: docs.len(),
            vocabulary: docs.vocabulary.len(),
            coherence: sel.scores.clone(),
            selected_coherence: coherence,
            topics: (0..model.k)
                .map(|k| TopicEntry {
                    topic_id: k,
                    label: cfg.topic_labels.get(&k.to_string()).cloned(),
                    top_words: model.top_terms(k, 50),
                })
                .collect(),
        };
        write_json(&out.join("topics.json"), &report)?;
        let volumes = topic_volumes(&model, &docs, &meta_rows, cfg.horizon_months)?;
        write_csv(
            &out.join("topic_volumes.csv"),
            &stamp,
            &["group", "topic_id", "month_index", "raw", "centered"],
            volumes.iter().map(|v| {
                vec![
                    v.group.to_string(),
                    v.topic_id.to_string(),
                    v.month_index.to_string(),
                    fmt_f(v.raw),
                    fmt_f(v.centered),
                ]
            }),
        )?;
        summary.topics = model.k;
        Ok((volumes, report))
    })?;

    stage("plots", || {
        let dir = out.join("plots");
        fs::create_dir_all(&dir)?;
        for v in &all_vars {
            let lines = group_lines(|g| group_series(&trimmed, v, g));
            fs::write(dir.join(format!("{v}.svg")), line_chart(v, &lines, &meta))?;
        }
        let (vols, report) = &volumes;
        let panels: Vec<(String, Vec<Line>)> = report
            .topics
            .iter()
            .map(|t| {
                let title = match &t.label {
                    Some(l) => format!("topic {} ({l})", t.topic_id),
                    None => format!("topic {}", t.topic_id),
                };
                let lines = group_lines(|g| {
                    vols.iter()
                        .filter(|v: &&TopicVolume| v.group == g && v.topic_id == t.topic_id)
                        .map(|v| (v.month_index as f64, v.centered, None))
                        .collect()
                });
                (title, lines)
            })
            .collect();
        fs::write(dir.join("topic_evolution.svg"), small_multiples(&panels, 4, &meta))?;
        Ok(())
    })?;

    if summary.statements == 0 {
        return Err(anyhow!("no institutional statements detected"));
    }
    Ok(summary)
}
