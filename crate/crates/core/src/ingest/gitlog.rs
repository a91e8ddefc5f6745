use serde_json::json;

/// Convert `git log --name-only --date=iso-strict` output into the commit
/// JSON-lines format read by [`parse_commits`](super::parse_commits).
/// Returns the JSON-lines text and the number of commits converted.
pub fn convert_gitlog(log: &str) -> (String, usize) {
    struct Pending {
        id: String,
        author: String,
        email: String,
        date: String,
        files: Vec<String>,
    }
    fn flush(p: Option<Pending>, out: &mut String, n: &mut usize) {
        if let Some(p) = p {
            out.push_str(
                &json!({"id": p.id, "author": p.author, "email": p.email, "date": p.date, "files": p.files})
                    .to_string(),
            );
            out.push('\n');
            *n += 1;
        }
    }
    let mut out = String::new();
    let mut n = 0;
    let mut cur: Option<Pending> = None;
    for line in log.lines() {
        if let Some(rest) = line.strip_prefix("commit ") {
            flush(cur.take(), &mut out, &mut n);
            let id = rest.split_whitespace().next().unwrap_or_default().to_string();
            cur = Some(Pending {
                id,
                author: String::new(),
                email: String::new(),
                date: String::new(),
                files: Vec::new(),
            });
            continue;
        }
        let Some(p) = cur.as_mut() else { continue };
        if let Some(rest) = line.strip_prefix("Author:") {
            let rest = rest.trim();
            match (rest.rfind('<'), rest.rfind('>')) {
                (Some(a), Some(b)) if a < b => {
                    p.author = rest[..a].trim().to_string();
                    p.email = rest[a + 1..b].trim().to_string();
                }
                _ => p.author = rest.to_string(),
            }
        } else if let Some(rest) = line.strip_prefix("Date:") {
            p.date = rest.trim().to_string();
        } else if line.starts_with("Merge:") || line.starts_with(' ') || line.starts_with('\t') || line.trim().is_empty() {
            // merge parents, message body, separators
        } else {
            p.files.push(line.trim().to_string());
        }
    }
    flush(cur, &mut out, &mut n);
    (out, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_commits_str, IngestOptions};

    const LOG: &str = "commit 1111aaaa (HEAD -> main)
Author: Alice Smith <alice@apache.org>
Date:   2016-05-01T10:00:00+02:00

    Add parser

    Longer description.

src/Parser.java
docs/logo.png

commit 2222bbbb
Merge: 1111aaaa 0000
Author: Bob <bob@apache.org>
Date:   2016-05-02T10:00:00Z

    Merge branch

";

    #[test]
    fn converts_and_parses() {
        let (jsonl, n) = convert_gitlog(LOG);
        assert_eq!(n, 2);
        let parsed = parse_commits_str(&jsonl, "p", &IngestOptions::default());
        assert_eq!(parsed.skipped, 0);
        assert_eq!(parsed.commits[0].commit_id, "1111aaaa");
        assert_eq!(parsed.commits[0].author, "alice@apache.org");
        assert_eq!(parsed.commits[0].files, vec!["src/Parser.java"]);
        assert!(parsed.commits[1].files.is_empty());
    }
}
