//! Mining toolkit for incubating open-source projects.
//!
//! The crate turns mailing-list archives and commit logs into three views of
//! a project's life:
//!
//! * monthly social (email reply) and technical (developer–file) networks
//!   and their structural metrics ([`stnet`]),
//! * institutional statements detected in email text, counted per role and
//!   grouped into topics ([`is_extract`], [`topics`]),
//! * panel time-series tests that relate the two ([`stats`]).
//!
//! [`ingest`] normalizes the raw archives; [`panel`] holds the
//! project × month × variable table shared by the analysis stages.

pub mod ingest;
pub mod is_extract;
pub mod panel;
pub mod stats;
pub mod stnet;
pub mod synth;
pub mod topics;

pub use ingest::{Commit, Email, ProjectManifest, Role, SentenceRecord};
pub use panel::{Outcome, PanelSeries};
