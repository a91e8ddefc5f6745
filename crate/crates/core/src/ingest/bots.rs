use std::path::Path;
use std::sync::LazyLock;

use regex::{Regex, RegexBuilder};

use super::{io_err, IngestError, Result};

const DEFAULT_RULES: &str = include_str!("../../data/bot_rules.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Sender,
    Subject,
    Body,
}

/// Regex rule set identifying messages and commits produced by automation.
#[derive(Debug, Clone)]
pub struct BotRules {
    rules: Vec<(Field, Regex)>,
}

static DEFAULT: LazyLock<BotRules> =
    LazyLock::new(|| BotRules::parse(DEFAULT_RULES).expect("bundled bot rules are valid"));

impl Default for BotRules {
    fn default() -> Self {
        DEFAULT.clone()
    }
}

impl BotRules {
    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    /// Parse the rule file format: `<sender|subject|body> <regex>` per line,
    /// `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (field, pattern) = line.split_once(char::is_whitespace).ok_or(IngestError::BotRule {
                line: i + 1,
                message: "expected `<field> <regex>`".into(),
            })?;
            let field = match field.to_ascii_lowercase().as_str() {
                "sender" => Field::Sender,
                "subject" => Field::Subject,
                "body" => Field::Body,
                other => {
                    return Err(IngestError::BotRule {
                        line: i + 1,
                        message: format!("unknown field {other:?}"),
                    })
                }
            };
            let re = RegexBuilder::new(pattern.trim())
                .case_insensitive(true)
                .build()
                .map_err(|e| IngestError::BotRule {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            rules.push((field, re));
        }
        Ok(Self { rules })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Append the rules of `other`.
    pub fn extend(&mut self, other: BotRules) {
        self.rules.extend(other.rules);
    }

    pub fn is_bot(&self, sender: &str, subject: &str, body: &str) -> bool {
        self.rules.iter().any(|(field, re)| match field {
            Field::Sender => re.is_match(sender),
            Field::Subject => re.is_match(subject),
            Field::Body => re.is_match(body),
        })
    }
}

/// Bot check against the bundled default rules.
pub fn detect_bot(sender: &str, subject: &str, body: &str) -> bool {
    DEFAULT.is_bot(sender, subject, body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buildbot_sender() {
        assert!(detect_bot("buildbot@apache.org", "", ""));
    }

    #[test]
    fn human_message() {
        assert!(!detect_bot("alice@example.org", "release plan", "Let's cut an RC next week."));
    }

    #[test]
    fn gitbox_subject() {
        assert!(detect_bot("someone@apache.org", "[GitBox] PR opened", ""));
    }

    #[test]
    fn ci_subjects() {
        assert!(detect_bot("x@apache.org", "Build failed in Jenkins: foo #12", ""));
        assert!(detect_bot("x@apache.org", "[jira] Created: (FOO-1) crash", ""));
        assert!(detect_bot("jenkins@builds.apache.org", "whatever", ""));
        assert!(!detect_bot("jenkinsfan@x.org", "Re: my build", ""));
    }

    #[test]
    fn custom_rules_file_format() {
        let rules = BotRules::parse("# c\nbody  ^auto-generated\n").unwrap();
        assert!(rules.is_bot("a@b.c", "s", "Auto-generated report"));
        assert!(!rules.is_bot("a@b.c", "s", "hand written"));
        assert!(BotRules::parse("nope x").is_err());
        assert!(BotRules::parse("sender (").is_err());
    }

    #[test]
    fn adding_rules_is_monotone() {
        let msgs = [
            ("a@x.org", "hello", "hi"),
            ("buildbot@x.org", "build", ""),
            ("b@x.org", "[ANNOUNCE] release", "released"),
        ];
        let base = BotRules::default();
        let mut more = base.clone();
        more.extend(BotRules::parse("subject announce").unwrap());
        let kept = |r: &BotRules| msgs.iter().filter(|(s, t, b)| !r.is_bot(s, t, b)).count();
        assert!(kept(&more) <= kept(&base));
        assert_eq!(kept(&base), 2);
        assert_eq!(kept(&more), 1);
    }
}
