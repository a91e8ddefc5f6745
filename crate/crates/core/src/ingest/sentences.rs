//! Rule-based sentence splitting for email bodies.
//!
//! Boundaries fall after terminal punctuation (`.`, `!`, `?`, optionally
//! followed by closing quotes or brackets) when the next word does not start
//! with a lowercase letter, at blank lines, and before bulleted or numbered
//! list lines. Known abbreviations and single-letter initials never end a
//! sentence. Spans tile the body: each sentence owns the whitespace that
//! follows it.

use crate::is_extract::tokenize::{default_tokenizer, Tokenizer};
use crate::is_extract::SentenceRecord;

const NEVER_FINAL: &[&str] = &[
    "e.g", "i.e", "eg", "ie", "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "vs", "cf", "viz", "approx", "incl",
    "fig", "figs", "st", "mt", "resp", "esp", "ca", "no", "nos", "vol", "pp", "sec", "ch", "al", "dept", "est",
    "u.s", "a.m", "p.m", "p.s",
];

/// Only abbreviations when capitalized; "sat." and "mar." are words.
const CALENDAR: &[&str] = &[
    "mon", "tue", "tues", "wed", "thu", "thur", "thurs", "fri", "sat", "sun", "jan", "feb", "mar", "apr", "jun", "jul",
    "aug", "sep", "sept", "oct", "nov", "dec",
];

fn is_closer(c: char) -> bool {
    matches!(c, ')' | ']' | '"' | '\'' | '\u{2019}' | '\u{201d}' | '>')
}

fn preceding_word(body: &str, end: usize) -> &str {
    let head = &body[..end];
    let start = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace() || matches!(c, '(' | '[' | '"' | '\''))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    &head[start..]
}

fn is_abbreviation(word: &str) -> bool {
    let w = word.trim_end_matches('.').to_lowercase();
    if w.is_empty() {
        return false;
    }
    if NEVER_FINAL.contains(&w.as_str()) {
        return true;
    }
    if word.starts_with(char::is_uppercase) && CALENDAR.contains(&w.as_str()) {
        return true;
    }
    // single-letter initial such as "J." in "J. Smith"
    let mut chars = word.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic())
}

fn is_list_marker(line: &str) -> bool {
    let t = line.trim_start();
    if t.starts_with("- ") || t.starts_with("* ") || t.starts_with("+ ") {
        return true;
    }
    let digits = t.chars().take_while(|c| c.is_ascii_digit()).count();
    digits > 0 && digits < 4 && matches!(t[digits..].chars().next(), Some('.' | ')')) && {
        let rest = &t[digits + 1..];
        rest.starts_with(' ')
    }
}

/// Period of a "1." style marker opening a line.
fn is_list_number(body: &str, period: usize) -> bool {
    let line_start = body[..period].rfind('\n').map(|i| i + 1).unwrap_or(0);
    let head = body[line_start..period].trim_start();
    (1..4).contains(&head.len()) && head.bytes().all(|b| b.is_ascii_digit())
}

/// Byte offsets where a new sentence begins (excluding 0).
fn boundaries(body: &str) -> Vec<usize> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = body.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            // consume the punctuation run and closers
            let mut j = i;
            while j + 1 < chars.len() && matches!(chars[j + 1].1, '.' | '!' | '?') {
                j += 1;
            }
            while j + 1 < chars.len() && is_closer(chars[j + 1].1) {
                j += 1;
            }
            let after = j + 1;
            if after < chars.len() && chars[after].1.is_whitespace() {
                let mut k = after;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    k += 1;
                }
                if k < chars.len() {
                    let next = chars[k].1;
                    let is_period_only = c == '.' && j == i;
                    let guarded = is_period_only
                        && (is_abbreviation(preceding_word(body, pos)) || is_list_number(body, pos));
                    let paragraph = body[chars[after].0..chars[k].0].matches('\n').count() >= 2;
                    if paragraph || (!guarded && !next.is_lowercase()) {
                        out.push(chars[k].0);
                    }
                }
                i = k;
                continue;
            }
            i = j + 1;
            continue;
        }
        if c == '\n' {
            // blank line or list item starts a new sentence
            let mut k = i + 1;
            let mut newlines = 1;
            while k < chars.len() && chars[k].1.is_whitespace() {
                if chars[k].1 == '\n' {
                    newlines += 1;
                }
                k += 1;
            }
            if k < chars.len() {
                let line_end = body[chars[k].0..].find('\n').map(|e| chars[k].0 + e).unwrap_or(bytes.len());
                let has_text_before = body[..pos].trim().len() > 0;
                if has_text_before && (newlines >= 2 || is_list_marker(&body[chars[k].0..line_end])) {
                    out.push(chars[k].0);
                }
            }
            i = k.max(i + 1);
            continue;
        }
        i += 1;
    }
    out.dedup();
    out
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split `body` into sentences. The returned records carry byte spans that
/// tile `body` in order; `email_id` is left empty for the caller to fill.
pub fn split_sentences(body: &str) -> Vec<SentenceRecord> {
    split_sentences_with(body, default_tokenizer())
}

pub fn split_sentences_with(body: &str, tokenizer: &dyn Tokenizer) -> Vec<SentenceRecord> {
    if body.trim().is_empty() {
        return Vec::new();
    }
    let mut starts = vec![0];
    starts.extend(boundaries(body).into_iter().filter(|&b| b > 0));
    starts.push(body.len());
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for w in starts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if body[s..e].trim().is_empty() {
            // whitespace-only piece joins the previous sentence
            if let Some(last) = spans.last_mut() {
                last.1 = e;
                continue;
            }
        }
        spans.push((s, e));
    }
    // a leading whitespace-only span absorbs into the next one
    if spans.len() > 1 && body[spans[0].0..spans[0].1].trim().is_empty() {
        let first = spans.remove(0);
        spans[0].0 = first.0;
    }
    spans
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| {
            let text = collapse_ws(&body[start..end]);
            let token_count = tokenizer.count(&text);
            SentenceRecord {
                email_id: String::new(),
                index,
                text,
                start,
                end,
                token_count,
                gold_label: None,
                predicted_label: None,
            }
        })
        .collect()
}
