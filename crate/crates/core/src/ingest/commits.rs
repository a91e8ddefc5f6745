use std::collections::BTreeSet;
use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::identity::resolve_identity;
use super::{io_err, Commit, IngestOptions, Result};

const DEFAULT_WHITELIST: &str = include_str!("../../data/source_extensions.txt");

/// Extension / file-name whitelist for source and markup files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFilter {
    extensions: BTreeSet<String>,
    file_names: BTreeSet<String>,
}

static DEFAULT_FILTER: LazyLock<SourceFilter> = LazyLock::new(|| SourceFilter::parse(DEFAULT_WHITELIST));

impl Default for SourceFilter {
    fn default() -> Self {
        DEFAULT_FILTER.clone()
    }
}

impl SourceFilter {
    /// One entry per line: `.ext` for extensions, anything else is an exact
    /// file name. `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let mut extensions = BTreeSet::new();
        let mut file_names = BTreeSet::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(ext) = line.strip_prefix('.') {
                extensions.insert(ext.to_lowercase());
            } else {
                file_names.insert(line.to_string());
            }
        }
        Self { extensions, file_names }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path).map_err(io_err(path))?))
    }

    pub fn len(&self) -> usize {
        self.extensions.len() + self.file_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn accepts(&self, path: &str) -> bool {
        let name = path.rsplit(['/', '\\']).next().unwrap_or(path);
        if self.file_names.contains(name) {
            return true;
        }
        match name.rsplit_once('.') {
            Some((stem, ext)) if !stem.is_empty() => self.extensions.contains(&ext.to_lowercase()),
            _ => false,
        }
    }
}

#[derive(Deserialize)]
struct RawCommit {
    id: String,
    #[serde(default)]
    author: String,
    #[serde(default)]
    email: String,
    date: String,
    #[serde(default)]
    files: Vec<String>,
}

/// Output of [`parse_commits`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommitParse {
    pub commits: Vec<Commit>,
    /// Lines that were not valid commit objects.
    pub skipped: usize,
    pub unparseable_authors: usize,
}

/// Parse a JSON-lines commit export (`{"id","author","email","date","files"}`
/// per line). Files are filtered through the whitelist; commits left with no
/// files are kept.
pub fn parse_commits(path: &Path, project_id: &str, opts: &IngestOptions) -> Result<CommitParse> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_commits_str(&text, project_id, opts))
}

pub fn parse_commits_str(text: &str, project_id: &str, opts: &IngestOptions) -> CommitParse {
    let mut out = CommitParse::default();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawCommit = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{project_id}: commit line {}: {e}", lineno + 1);
                out.skipped += 1;
                continue;
            }
        };
        let Some(authored_at) = parse_iso(&raw.date) else {
            log::warn!("{project_id}: commit {} has bad date {:?}", raw.id, raw.date);
            out.skipped += 1;
            continue;
        };
        let from = if raw.email.is_empty() {
            raw.author.clone()
        } else {
            format!("{} <{}>", raw.author, raw.email)
        };
        let who = resolve_identity(&from, &opts.identities, project_id);
        if !who.parsed {
            out.unparseable_authors += 1;
        }
        let is_bot = opts.bot_rules.is_bot(&from, "", "");
        let mut seen = BTreeSet::new();
        let files = raw
            .files
            .into_iter()
            .filter(|f| opts.source_filter.accepts(f))
            .filter(|f| seen.insert(f.clone()))
            .collect();
        out.commits.push(Commit {
            commit_id: raw.id,
            project_id: project_id.to_string(),
            authored_at,
            month_index: 0,
            author: who.key,
            files,
            is_bot,
        });
    }
    out
}

fn parse_iso(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    DateTime::parse_from_rfc3339(s)
        .or_else(|_| DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S %z"))
        .map(|d| d.with_timezone(&Utc))
        .ok()
}
