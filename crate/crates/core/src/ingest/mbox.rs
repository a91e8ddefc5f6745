use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, TimeZone, Utc};
use mailparse::{MailHeaderMap, ParsedMail};
use regex::Regex;
use sha2::{Digest, Sha256};

use super::identity::{extract_address, resolve_identity};
use super::sentences::split_sentences_with;
use super::{io_err, Email, IngestOptions, Result};

/// Output of [`parse_mbox`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MboxParse {
    pub emails: Vec<Email>,
    /// Messages that could not be parsed (bad MIME, missing or invalid Date).
    pub skipped: usize,
    pub unparseable_from: usize,
}

/// Parse an mbox file. `list` is the mailing-list name recorded on every
/// email. Unreadable files are an error; bad messages are skipped and counted.
pub fn parse_mbox(path: &Path, project_id: &str, list: &str, opts: &IngestOptions) -> Result<MboxParse> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(parse_mbox_bytes(&bytes, project_id, list, opts))
}

pub fn parse_mbox_bytes(bytes: &[u8], project_id: &str, list: &str, opts: &IngestOptions) -> MboxParse {
    let mut out = MboxParse::default();
    for (n, raw) in split_messages(bytes).into_iter().enumerate() {
        match parse_message(&raw, project_id, list, opts) {
            Ok((email, from_ok)) => {
                if !from_ok {
                    out.unparseable_from += 1;
                }
                out.emails.push(email);
            }
            Err(reason) => {
                log::warn!("{project_id}/{list}: skipping message #{n}: {reason}");
                out.skipped += 1;
            }
        }
    }
    out
}

/// Split on `From ` separator lines that open the file or follow a blank
/// line; `>From ` escapes are undone.
fn split_messages(bytes: &[u8]) -> Vec<Vec<u8>> {
    let mut messages = Vec::new();
    let mut current: Option<Vec<u8>> = None;
    let mut prev_blank = true;
    for line in bytes.split_inclusive(|&b| b == b'\n') {
        if prev_blank && line.starts_with(b"From ") {
            if let Some(m) = current.take() {
                messages.push(m);
            }
            current = Some(Vec::new());
            prev_blank = false;
            continue;
        }
        let trimmed = trim_eol(line);
        prev_blank = trimmed.is_empty();
        if let Some(buf) = current.as_mut() {
            let quoted = trimmed.iter().take_while(|&&b| b == b'>').count();
            if quoted > 0 && trimmed[quoted..].starts_with(b"From ") {
                buf.extend_from_slice(&line[1..]);
            } else {
                buf.extend_from_slice(line);
            }
        }
    }
    if let Some(m) = current {
        messages.push(m);
    }
    messages.retain(|m| m.iter().any(|b| !b.is_ascii_whitespace()));
    messages
}

fn trim_eol(line: &[u8]) -> &[u8] {
    let mut end = line.len();
    while end > 0 && matches!(line[end - 1], b'\n' | b'\r') {
        end -= 1;
    }
    &line[..end]
}

static YEAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(19|20)\d\d\b").unwrap());

/// RFC 2822 first, then the lenient parser for the many archive dates that
/// bend the grammar. A date without a plausible year is rejected.
pub(crate) fn parse_date_header(raw: &str) -> Option<DateTime<Utc>> {
    let s = raw.trim();
    if let Ok(d) = DateTime::parse_from_rfc2822(s) {
        return Some(d.with_timezone(&Utc));
    }
    if !YEAR.is_match(s) {
        return None;
    }
    let epoch = mailparse::dateparse(s).ok()?;
    Utc.timestamp_opt(epoch, 0).single()
}

static ANGLE_ID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>\s]+>").unwrap());

fn first_id(raw: &str) -> Option<String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    Some(
        ANGLE_ID
            .find(raw)
            .map(|m| m.as_str().to_string())
            .unwrap_or_else(|| format!("<{}>", raw.trim_matches(['<', '>']))),
    )
}

fn all_ids(raw: &str) -> Vec<String> {
    ANGLE_ID.find_iter(raw).map(|m| m.as_str().to_string()).collect()
}

/// Synthetic Message-ID for messages without one: a digest of sender,
/// timestamp and subject.
pub(crate) fn synthetic_id(sender: &str, sent_at: &DateTime<Utc>, subject: &str) -> String {
    let mut h = Sha256::new();
    h.update(sender.as_bytes());
    h.update([0]);
    h.update(sent_at.to_rfc3339().as_bytes());
    h.update([0]);
    h.update(subject.as_bytes());
    let digest = h.finalize();
    format!("<synthetic.{}@stsgov.invalid>", hex::encode(&digest[..12]))
}

fn parse_message(raw: &[u8], project_id: &str, list: &str, opts: &IngestOptions) -> std::result::Result<(Email, bool), String> {
    let mail = mailparse::parse_mail(raw).map_err(|e| e.to_string())?;
    let headers = mail.get_headers();
    let date = headers.get_first_value("Date").ok_or("missing Date header")?;
    let sent_at = parse_date_header(&date).ok_or_else(|| format!("bad Date {date:?}"))?;
    let from_raw = headers.get_first_value("From").unwrap_or_default();
    let subject = headers.get_first_value("Subject").unwrap_or_default().trim().to_string();
    let who = resolve_identity(&from_raw, &opts.identities, project_id);

    let message_id = headers
        .get_first_value("Message-ID")
        .and_then(|v| first_id(&v))
        .unwrap_or_else(|| synthetic_id(&who.key, &sent_at, &subject));
    let in_reply_to = headers.get_first_value("In-Reply-To").and_then(|v| ANGLE_ID.find(&v).map(|m| m.as_str().to_string()));
    let references = headers.get_first_value("References").map(|v| all_ids(&v)).unwrap_or_default();
    let mut recipients: Vec<String> = ["To", "Cc"]
        .iter()
        .flat_map(|h| headers.get_all_values(h))
        .flat_map(|v| match mailparse::addrparse(&v) {
            Ok(list) => list
                .iter()
                .flat_map(|a| match a {
                    mailparse::MailAddr::Single(s) => vec![s.addr.clone()],
                    mailparse::MailAddr::Group(g) => g.addrs.iter().map(|s| s.addr.clone()).collect(),
                })
                .filter_map(|a| extract_address(&a))
                .collect::<Vec<_>>(),
            Err(_) => extract_address(&v).into_iter().collect(),
        })
        .map(|a| opts.identities.canonical(&a))
        .collect();
    recipients.sort();
    recipients.dedup();

    let raw_body = extract_text(&mail);
    let is_bot = opts.bot_rules.is_bot(&from_raw, &subject, &raw_body);
    let body = strip_quoted(&raw_body);
    let mut sentences = split_sentences_with(&body, opts.tokenizer.as_ref());
    for s in &mut sentences {
        s.email_id = message_id.clone();
    }
    let email = Email {
        message_id,
        project_id: project_id.to_string(),
        list: list.to_string(),
        sent_at,
        month_index: 0,
        sender: who.key,
        in_reply_to,
        references,
        parent_id: None,
        parent_sender: None,
        thread_id: String::new(),
        recipients,
        direct_recipients: Vec::new(),
        subject,
        body,
        is_bot,
        sentences,
    };
    Ok((email, who.parsed))
}

fn is_attachment(part: &ParsedMail) -> bool {
    part.get_content_disposition().disposition == mailparse::DispositionType::Attachment
}

/// Text of the first inline `text/plain` part, falling back to the first
/// `text/html` part reduced to text.
fn extract_text(mail: &ParsedMail) -> String {
    fn find<'a>(part: &'a ParsedMail<'a>, mime: &str) -> Option<&'a ParsedMail<'a>> {
        if part.subparts.is_empty() {
            return (part.ctype.mimetype.eq_ignore_ascii_case(mime) && !is_attachment(part)).then_some(part);
        }
        part.subparts.iter().find_map(|p| find(p, mime))
    }
    if let Some(p) = find(mail, "text/plain") {
        return p.get_body().unwrap_or_default().replace("\r\n", "\n");
    }
    if let Some(p) = find(mail, "text/html") {
        return html_to_text(&p.get_body().unwrap_or_default());
    }
    if mail.subparts.is_empty() && mail.ctype.mimetype.starts_with("text/") {
        return mail.get_body().unwrap_or_default().replace("\r\n", "\n");
    }
    String::new()
}

static HTML_DROP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<(script|style|head)\b.*?</(script|style|head)\s*>").unwrap());
static HTML_BREAK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<br\s*/?>|</(p|div|li|tr|h[1-6])\s*>").unwrap());
static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^>]*>").unwrap());
static HTML_ENTITY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"&(#[0-9]+|#x[0-9a-fA-F]+|[a-zA-Z]+);").unwrap());

pub(crate) fn html_to_text(html: &str) -> String {
    let s = HTML_DROP.replace_all(html, "");
    let s = HTML_BREAK.replace_all(&s, "\n");
    let s = HTML_TAG.replace_all(&s, "");
    HTML_ENTITY
        .replace_all(&s, |c: &regex::Captures| {
            let e = &c[1];
            let decoded = match e {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ if e.starts_with("#x") || e.starts_with("#X") => u32::from_str_radix(&e[2..], 16).ok().and_then(char::from_u32),
                _ if e.starts_with('#') => e[1..].parse().ok().and_then(char::from_u32),
                _ => None,
            };
            decoded.map(String::from).unwrap_or_else(|| c[0].to_string())
        })
        .replace("\r\n", "\n")
}

static ATTRIBUTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s*On\b.*\bwrote:\s*$").unwrap());
static ORIGINAL_MESSAGE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*-{2,}\s*(original message|forwarded message)\s*-{2,}").unwrap());

/// Remove `>`-quoted lines, "On ... wrote:" attributions (one or two lines)
/// and anything after an "Original Message" separator.
pub fn strip_quoted(body: &str) -> String {
    let lines: Vec<&str> = body.lines().collect();
    let mut keep = Vec::with_capacity(lines.len());
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if ORIGINAL_MESSAGE.is_match(line) {
            break;
        }
        if line.trim_start().starts_with('>') || ATTRIBUTION.is_match(line) {
            i += 1;
            continue;
        }
        // attribution wrapped over two lines
        if line.trim_start().starts_with("On ")
            && i + 1 < lines.len()
            && lines[i + 1].trim_end().ends_with("wrote:")
        {
            i += 2;
            continue;
        }
        keep.push(line);
        i += 1;
    }
    let mut out = keep.join("\n");
    let trimmed = out.trim_end().len();
    out.truncate(trimmed);
    out
}
