use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::threads::link_threads;
use super::{
    io_err, parse_commits, parse_mbox, BotRules, Commit, Email, IdentityMap, ProjectManifest, Result,
    SourceFilter,
};
use crate::is_extract::tokenize::{Tokenizer, WordpieceEstimate};

/// Shared configuration for the parsers.
#[derive(Clone)]
pub struct IngestOptions {
    pub bot_rules: BotRules,
    pub source_filter: SourceFilter,
    pub identities: IdentityMap,
    pub tokenizer: Arc<dyn Tokenizer + Send + Sync>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            bot_rules: BotRules::default(),
            source_filter: SourceFilter::default(),
            identities: IdentityMap::default(),
            tokenizer: Arc::new(WordpieceEstimate::default()),
        }
    }
}

impl std::fmt::Debug for IngestOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IngestOptions")
            .field("bot_rules", &self.bot_rules.len())
            .field("source_filter", &self.source_filter.len())
            .finish_non_exhaustive()
    }
}

/// Per-project ingest counters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub emails_parsed: usize,
    pub emails_skipped: usize,
    pub emails_bot: usize,
    pub emails_duplicate: usize,
    pub emails_out_of_window: usize,
    pub emails_retained: usize,
    pub unparseable_from: usize,
    pub commits_parsed: usize,
    pub commits_skipped: usize,
    pub commits_bot: usize,
    pub commits_out_of_window: usize,
    pub commits_retained: usize,
    pub commits_without_source_files: usize,
    pub mbox_files: usize,
}

impl IngestStats {
    pub fn bot_email_ratio(&self) -> f64 {
        ratio(self.emails_bot, self.emails_parsed)
    }

    pub fn bot_commit_ratio(&self) -> f64 {
        ratio(self.commits_bot, self.commits_parsed)
    }

    pub fn add(&mut self, o: &IngestStats) {
        self.emails_parsed += o.emails_parsed;
        self.emails_skipped += o.emails_skipped;
        self.emails_bot += o.emails_bot;
        self.emails_duplicate += o.emails_duplicate;
        self.emails_out_of_window += o.emails_out_of_window;
        self.emails_retained += o.emails_retained;
        self.unparseable_from += o.unparseable_from;
        self.commits_parsed += o.commits_parsed;
        self.commits_skipped += o.commits_skipped;
        self.commits_bot += o.commits_bot;
        self.commits_out_of_window += o.commits_out_of_window;
        self.commits_retained += o.commits_retained;
        self.commits_without_source_files += o.commits_without_source_files;
        self.mbox_files += o.mbox_files;
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Normalized, bot-free, in-window records of one project.
#[derive(Debug, Clone)]
pub struct ProjectCorpus {
    pub manifest: ProjectManifest,
    pub emails: Vec<Email>,
    pub commits: Vec<Commit>,
    pub stats: IngestStats,
}

/// `<project_dir>/<list>/<YYYYMM>.mbox`, sorted by list then file name.
fn mbox_files(project_dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    if !project_dir.is_dir() {
        return Ok(out);
    }
    let mut lists: Vec<PathBuf> = std::fs::read_dir(project_dir)
        .map_err(io_err(project_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    lists.sort();
    for list_dir in lists {
        let list = list_dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let mut files: Vec<PathBuf> = std::fs::read_dir(&list_dir)
            .map_err(io_err(&list_dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "mbox"))
            .collect();
        files.sort();
        out.extend(files.into_iter().map(|f| (list.clone(), f)));
    }
    Ok(out)
}

/// Ingest one project directory: all mailing lists are merged (the list
/// name stays on each email) and `commits.jsonl` is read when present.
pub fn ingest_project(project_dir: &Path, manifest: &ProjectManifest, opts: &IngestOptions) -> Result<ProjectCorpus> {
    let pid = manifest.project_id.as_str();
    let mut opts = opts.clone();
    for entry in manifest.roster.iter().filter(|e| e.since.is_none()) {
        opts.identities.set_role(pid, &entry.identity_key, entry.role);
    }
    let mut stats = IngestStats::default();

    let files = mbox_files(project_dir)?;
    stats.mbox_files = files.len();
    let parsed = files
        .par_iter()
        .map(|(list, path)| parse_mbox(path, pid, list, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut emails = Vec::new();
    for p in parsed {
        stats.emails_skipped += p.skipped;
        stats.unparseable_from += p.unparseable_from;
        stats.emails_parsed += p.emails.len();
        emails.extend(p.emails);
    }
    emails.sort_by(|a, b| (a.sent_at, &a.message_id, &a.list).cmp(&(b.sent_at, &b.message_id, &b.list)));
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(emails.len());
    for e in emails {
        if e.is_bot {
            stats.emails_bot += 1;
        } else if !seen.insert(e.message_id.clone()) {
            stats.emails_duplicate += 1;
        } else if !manifest.in_window(&e.sent_at) {
            stats.emails_out_of_window += 1;
        } else {
            kept.push(e);
        }
    }
    link_threads(&mut kept);
    for e in &mut kept {
        e.month_index = manifest.month_of(&e.sent_at);
    }
    stats.emails_retained = kept.len();

    let commits_path = project_dir.join("commits.jsonl");
    let mut commits = Vec::new();
    if commits_path.is_file() {
        let parsed = parse_commits(&commits_path, pid, &opts)?;
        stats.commits_skipped = parsed.skipped;
        stats.commits_parsed = parsed.commits.len();
        for mut c in parsed.commits {
            if c.is_bot {
                stats.commits_bot += 1;
            } else if !manifest.in_window(&c.authored_at) {
                stats.commits_out_of_window += 1;
            } else {
                c.month_index = manifest.month_of(&c.authored_at);
                if c.files.is_empty() {
                    stats.commits_without_source_files += 1;
                }
                commits.push(c);
            }
        }
    }
    commits.sort_by(|a, b| (a.authored_at, &a.commit_id).cmp(&(b.authored_at, &b.commit_id)));
    stats.commits_retained = commits.len();

    Ok(ProjectCorpus {
        manifest: manifest.clone(),
        emails: kept,
        commits,
        stats,
    })
}
