//! Normalization of raw mailing-list archives and commit logs.
//!
//! Mbox files are parsed into [`Email`] records, commit exports into
//! [`Commit`] records. Bot traffic is flagged by regex rules, non-source files
//! are dropped through an extension whitelist, author addresses are resolved
//! to canonical identities, and reply threads are reconstructed before the
//! records are bucketed into months relative to the incubation start.

mod bots;
mod commits;
mod corpus;
mod gitlog;
mod identity;
mod manifest;
mod mbox;
mod sentences;
mod threads;

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use bots::{detect_bot, BotRules};
pub use commits::{parse_commits, parse_commits_str, CommitParse, SourceFilter};
pub use corpus::{ingest_project, IngestOptions, IngestStats, ProjectCorpus};
pub use gitlog::convert_gitlog;
pub use identity::{extract_address, resolve_identity, IdentityMap, ResolvedIdentity, Role, RosterEntry, UNKNOWN_IDENTITY};
pub use manifest::{load_manifests, month_index, ProjectManifest};
pub use mbox::{parse_mbox, parse_mbox_bytes, strip_quoted, MboxParse};
pub use sentences::{split_sentences, split_sentences_with};
pub use threads::{link_threads, normalize_subject};

pub use crate::is_extract::SentenceRecord;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("invalid bot rule on line {line}: {message}")]
    BotRule { line: usize, message: String },
    #[error("csv {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, IngestError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> IngestError {
    let path = path.into();
    move |source| IngestError::Io { path, source }
}

/// A normalized mailing-list message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Email {
    pub message_id: String,
    pub project_id: String,
    /// Mailing list the message was archived under (`dev`, `user`, ...).
    pub list: String,
    pub sent_at: DateTime<Utc>,
    /// Months since the incubation start month; negative in the grace month
    /// before the start. Zero until assigned by [`ingest_project`].
    #[serde(default)]
    pub month_index: i32,
    pub sender: String,
    pub in_reply_to: Option<String>,
    #[serde(default)]
    pub references: Vec<String>,
    /// Parent message resolved by thread linkage.
    #[serde(default)]
    pub parent_id: Option<String>,
    #[serde(default)]
    pub parent_sender: Option<String>,
    #[serde(default)]
    pub thread_id: String,
    /// Raw To/Cc addresses, lowercased.
    #[serde(default)]
    pub recipients: Vec<String>,
    /// Developers addressed personally by a thread-starting message.
    #[serde(default)]
    pub direct_recipients: Vec<String>,
    pub subject: String,
    pub body: String,
    pub is_bot: bool,
    #[serde(default)]
    pub sentences: Vec<SentenceRecord>,
}

/// A normalized commit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commit {
    pub commit_id: String,
    pub project_id: String,
    pub authored_at: DateTime<Utc>,
    #[serde(default)]
    pub month_index: i32,
    pub author: String,
    pub files: Vec<String>,
    pub is_bot: bool,
}
