use proptest::prelude::*;

use stsgov_core::ingest::{parse_mbox_bytes, split_sentences, BotRules, IngestOptions};

/// Bodies and their hand-segmented sentences from the fixture file.
fn fixture() -> Vec<(String, Vec<String>)> {
    let text = include_str!("fixtures/sentences.txt");
    let mut out = Vec::new();
    for block in text.split("\n---\n") {
        let mut body = String::new();
        let mut want = Vec::new();
        let mut paragraph = false;
        for line in block.lines().filter(|l| !l.starts_with('#')) {
            if line.is_empty() {
                paragraph = !body.is_empty();
                continue;
            }
            let list = line.starts_with("- ") || line.chars().next().is_some_and(|c| c.is_ascii_digit());
            if !body.is_empty() {
                body.push_str(if paragraph {
                    "\n\n"
                } else if list {
                    "\n"
                } else {
                    " "
                });
            }
            paragraph = false;
            body.push_str(line);
            want.push(line.to_string());
        }
        if !want.is_empty() {
            out.push((body, want));
        }
    }
    out
}

#[test]
fn hand_segmented_fixture() {
    let cases = fixture();
    assert_eq!(cases.iter().map(|c| c.1.len()).sum::<usize>(), 50);
    let mut bad = Vec::new();
    for (body, want) in cases {
        let got: Vec<String> = split_sentences(&body).into_iter().map(|s| s.text).collect();
        if got != want {
            bad.push(format!("{got:?}\n  != {want:?}"));
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

const MBOX: &str = "From a@x Mon Mar  2 10:00:00 2015
From: Alice <alice@example.org>
To: dev@podling.apache.org
Date: Mon, 2 Mar 2015 10:00:00 +0000
Message-ID: <m1@example.org>
Subject: [VOTE] Release 0.1

Please vote. The vote is open for 72 hours.

From b@x Mon Mar  2 11:00:00 2015
From: \"Bob B.\" <bob@example.org>
Date: Mon, 2 Mar 2015 11:00:00 +0000
Message-ID: <m2@example.org>
In-Reply-To: <m1@example.org>
Subject: Re: [VOTE] Release 0.1

+1 (binding).
> Please vote.

From j@x Mon Mar  2 12:00:00 2015
From: jenkins@builds.apache.org
Date: Mon, 2 Mar 2015 12:00:00 +0000
Message-ID: <m3@example.org>
Subject: Build failed in Jenkins: podling #12

See the console output.
";

#[test]
fn mbox_example() {
    let p = parse_mbox_bytes(MBOX.as_bytes(), "podling", "dev", &IngestOptions::default());
    assert_eq!(p.skipped, 0);
    let e = &p.emails;
    assert_eq!(e.len(), 3);
    assert_eq!(e[0].sender, "alice@example.org");
    assert_eq!(e[0].sentences.len(), 2);
    assert!(e[0].sentences.iter().all(|s| s.email_id == "<m1@example.org>"));
    assert_eq!(e[1].in_reply_to.as_deref(), Some("<m1@example.org>"));
    assert_eq!(e[1].body, "+1 (binding).");
    assert_eq!([e[0].is_bot, e[1].is_bot, e[2].is_bot], [false, false, true]);

    let again = parse_mbox_bytes(MBOX.as_bytes(), "podling", "dev", &IngestOptions::default());
    assert_eq!(p, again);
    let crlf = MBOX.replace('\n', "\r\n");
    let p2 = parse_mbox_bytes(crlf.as_bytes(), "podling", "dev", &IngestOptions::default());
    let ids = |p: &stsgov_core::ingest::MboxParse| p.emails.iter().map(|e| e.message_id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&p), ids(&p2));
}

#[test]
fn extra_rules_only_add_bots() {
    let plain = IngestOptions {
        bot_rules: BotRules::empty(),
        ..Default::default()
    };
    assert!(parse_mbox_bytes(MBOX.as_bytes(), "p", "dev", &plain).emails.iter().all(|e| !e.is_bot));
    let mut rules = BotRules::default();
    rules.extend(BotRules::parse("sender ^\"?bob").unwrap());
    let more = IngestOptions {
        bot_rules: rules,
        ..Default::default()
    };
    let flags: Vec<bool> = parse_mbox_bytes(MBOX.as_bytes(), "p", "dev", &more).emails.iter().map(|e| e.is_bot).collect();
    assert_eq!(flags, vec![false, true, true]);
    assert!(BotRules::parse("header x").is_err());
    assert!(BotRules::parse("sender (").is_err());
}

fn body_text() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[A-Za-z]{1,8}",
        Just(". ".to_string()),
        Just("! ".to_string()),
        Just("? ".to_string()),
        Just(" ".to_string()),
        Just("\n".to_string()),
        Just("\n\n".to_string()),
        Just("\n- ".to_string()),
        Just("\n1. ".to_string()),
        Just("e.g. ".to_string()),
        Just("J. ".to_string()),
        Just("\"".to_string()),
        Just("é".to_string()),
        Just("3.14".to_string()),
    ];
    prop::collection::vec(piece, 0..60).prop_map(|v| v.concat())
}

proptest! {
    #[test]
    fn spans_tile_the_body(body in body_text()) {
        let s = split_sentences(&body);
        if body.trim().is_empty() {
            prop_assert!(s.is_empty());
        } else {
            prop_assert_eq!(s[0].start, 0);
            prop_assert_eq!(s.last().unwrap().end, body.len());
            for w in s.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            for (i, r) in s.iter().enumerate() {
                prop_assert_eq!(r.index, i);
                prop_assert!(!r.text.is_empty());
                let collapsed = body[r.start..r.end].split_whitespace().collect::<Vec<_>>().join(" ");
                prop_assert_eq!(&r.text, &collapsed);
            }
        }
    }

    #[test]
    fn bot_flags_monotone_in_rules(extra in prop::sample::subsequence(
        vec!["sender alice", "subject release", "body console", "sender bob", "subject nothing-matches"], 0..5)
    ) {
        let base = parse_mbox_bytes(MBOX.as_bytes(), "p", "dev", &IngestOptions::default());
        let mut rules = BotRules::default();
        rules.extend(BotRules::parse(&extra.join("\n")).unwrap());
        let opts = IngestOptions { bot_rules: rules, ..Default::default() };
        let more = parse_mbox_bytes(MBOX.as_bytes(), "p", "dev", &opts);
        for (a, b) in base.emails.iter().zip(&more.emails) {
            prop_assert!(!a.is_bot || b.is_bot);
        }
    }
}
