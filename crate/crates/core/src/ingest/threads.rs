use std::collections::{BTreeSet, HashMap};
use std::sync::LazyLock;

use chrono::Duration;
use regex::Regex;

use super::Email;

static RE_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s*re\s*(\[\d+\])?\s*:\s*").unwrap());

/// Subject with any number of leading `Re:` prefixes removed and whitespace
/// collapsed. Returns whether a prefix was present.
pub fn normalize_subject(subject: &str) -> (String, bool) {
    let mut s = subject.trim();
    let mut had_prefix = false;
    while let Some(m) = RE_PREFIX.find(s) {
        s = &s[m.end()..];
        had_prefix = true;
    }
    (s.split_whitespace().collect::<Vec<_>>().join(" "), had_prefix)
}

const SUBJECT_WINDOW_DAYS: i64 = 30;

/// Resolve reply parents, thread roots and direct addressees for one
/// project's emails. Sorts `emails` by `(sent_at, message_id)`.
///
/// Parent lookup order: `In-Reply-To`, then the latest `References` entry
/// present in the corpus, then the most recent earlier message with the same
/// `Re:`-stripped subject within 30 days (only for `Re:` subjects).
pub fn link_threads(emails: &mut [Email]) {
    emails.sort_by(|a, b| (a.sent_at, &a.message_id).cmp(&(b.sent_at, &b.message_id)));
    let by_id: HashMap<String, usize> = emails
        .iter()
        .enumerate()
        .map(|(i, e)| (e.message_id.clone(), i))
        .collect();
    let developers: BTreeSet<String> = emails.iter().map(|e| e.sender.clone()).collect();

    let mut parents: Vec<Option<usize>> = vec![None; emails.len()];
    let mut last_by_subject: HashMap<String, usize> = HashMap::new();
    for i in 0..emails.len() {
        let e = &emails[i];
        let lookup = |id: &String| by_id.get(id).copied().filter(|&j| j != i);
        let mut parent = e.in_reply_to.as_ref().and_then(lookup);
        if parent.is_none() {
            parent = e.references.iter().rev().find_map(lookup);
        }
        let (subject, is_reply) = normalize_subject(&e.subject);
        if parent.is_none() && is_reply && !subject.is_empty() {
            if let Some(&j) = last_by_subject.get(&subject) {
                if e.sent_at - emails[j].sent_at <= Duration::days(SUBJECT_WINDOW_DAYS) {
                    parent = Some(j);
                }
            }
        }
        if !subject.is_empty() {
            last_by_subject.insert(subject, i);
        }
        parents[i] = parent;
    }

    for i in 0..emails.len() {
        // walk to the root; the step bound guards against header cycles
        let mut root = i;
        for _ in 0..emails.len() {
            match parents[root] {
                Some(p) if p != i => root = p,
                _ => break,
            }
        }
        let parent = parents[i];
        let parent_id = parent.map(|p| emails[p].message_id.clone());
        let parent_sender = parent.map(|p| emails[p].sender.clone());
        let thread_id = emails[root].message_id.clone();
        let e = &mut emails[i];
        e.parent_id = parent_id;
        e.parent_sender = parent_sender;
        e.thread_id = thread_id;
        e.direct_recipients = if e.parent_id.is_none() && e.in_reply_to.is_none() {
            e.recipients
                .iter()
                .filter(|r| **r != e.sender && developers.contains(*r))
                .cloned()
                .collect()
        } else {
            Vec::new()
        };
    }
}
