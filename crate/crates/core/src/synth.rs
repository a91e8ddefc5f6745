//! Seeded synthetic data: labelled sentence corpora, planted-topic
//! documents, coupled time series and whole mailing-list/commit corpora.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{Duration, Months, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::ingest::{split_sentences, strip_quoted};
use crate::is_extract::{tokenize::default_tokenizer, Segment};
use crate::panel::{self, Outcome, PanelSeries, ProjectSeries};

const SUBJECTS: &[&str] = &[
    "release", "website", "build", "roadmap", "board report", "documentation", "logo", "jira cleanup",
    "podling name", "new committer", "mentors", "graduation",
];
const ITEMS: &[&str] = &[
    "the release candidate", "the website", "the podling report", "the build scripts", "the user guide",
    "the next milestone", "the logo proposal", "the issue tracker", "the download page", "the roadmap",
];
const IS_TEMPLATES: &[&str] = &[
    "Every release must be approved by a vote of the PMC before it is published.",
    "All contributors shall sign the ICLA before their patches can be accepted.",
    "The podling is required to submit a board report every quarter.",
    "Please vote on {} and the vote will stay open for at least 72 hours.",
    "Source files must carry the Apache license header.",
    "According to the incubator policy we must list {} in the status file.",
    "Committers shall review each change to {} before merging it.",
    "New committers are required to be voted in by the existing committers.",
    "Binary dependencies must have licenses compatible with the Apache license.",
    "The policy is that {} must pass the release audit tool.",
];
const FILLER_TEMPLATES: &[&str] = &[
    "Thanks for looking into {}.",
    "I pushed a small fix for {} this morning.",
    "Has anyone tried {} on Windows yet?",
    "Looks good to me, nice work on {}.",
    "I am travelling next week so replies will be slow.",
    "The nightly build of {} passed again.",
    "I updated {} with the latest screenshots.",
    "Could you share the stack trace you are seeing?",
    "Welcome to the list, glad to have you here.",
    "I think {} is almost ready.",
    "Let me know if you hit any problems with {}.",
    "See you at the meetup on Thursday.",
];

fn fill(rng: &mut ChaCha8Rng, template: &str) -> String {
    template.replace("{}", ITEMS.choose(rng).unwrap())
}

/// Segments of labelled sentences where positives always contain a deontic
/// marker and negatives never do. Exactly `round(n · positive_rate)`
/// sentences are positive.
pub fn separable_is_corpus(n_sentences: usize, positive_rate: f64, seed: u64) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pos = (n_sentences as f64 * positive_rate).round() as usize;
    let mut labels: Vec<bool> = (0..n_sentences).map(|i| i < n_pos).collect();
    labels.shuffle(&mut rng);
    let tok = default_tokenizer();
    let mut out = Vec::new();
    let mut next_pos = 0;
    let mut i = 0;
    while i < labels.len() {
        let len = rng.gen_range(3..=6).min(labels.len() - i);
        let lab = labels[i..i + len].to_vec();
        let texts: Vec<String> = lab
            .iter()
            .map(|&p| {
                let tpl = if p {
                    // cycle so every statement form is represented
                    next_pos += 1;
                    IS_TEMPLATES[(next_pos - 1) % IS_TEMPLATES.len()]
                } else {
                    FILLER_TEMPLATES.choose(&mut rng).unwrap()
                };
                fill(&mut rng, tpl)
            })
            .collect();
        out.push(Segment {
            email_id: format!("<synthetic-{seed}-{}@example.org>", out.len()),
            start: 0,
            total_tokens: texts.iter().map(|t| tok.count(t)).sum(),
            texts,
            labels: lab,
            predicted: None,
        });
        i += len;
    }
    out
}

fn alpha_code(mut n: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'a' + (n % 26) as u8);
        n /= 26;
        if n == 0 {
            break;
        }
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

/// Term `j` of planted topic `t`.
pub fn planted_word(t: usize, j: usize) -> String {
    format!("top{}word{}", alpha_code(t), alpha_code(j))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTopics {
    pub k: usize,
    pub words_per_topic: usize,
    pub n_docs: usize,
    pub doc_len: usize,
    /// Share of each document's tokens drawn from topics other than its own.
    pub mix: f64,
}

impl Default for PlantedTopics {
    fn default() -> Self {
        Self {
            k: 2,
            words_per_topic: 20,
            n_docs: 200,
            doc_len: 20,
            mix: 0.0,
        }
    }
}

/// Documents over `k` disjoint vocabularies, each document built around one
/// topic. Returns the token lists and each document's topic.
pub fn planted_topic_corpus(cfg: &PlantedTopics, seed: u64) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(cfg.n_docs);
    let mut topics = Vec::with_capacity(cfg.n_docs);
    for d in 0..cfg.n_docs {
        let own = d % cfg.k;
        let doc = (0..cfg.doc_len)
            .map(|_| {
                let t = if cfg.k > 1 && rng.gen::<f64>() < cfg.mix {
                    (own + rng.gen_range(1..cfg.k)) % cfg.k
                } else {
                    own
                };
                planted_word(t, rng.gen_range(0..cfg.words_per_topic))
            })
            .collect();
        docs.push(doc);
        topics.push(own);
    }
    (docs, topics)
}

const BURN_IN: usize = 50;

/// `x_t = a x_{t-1} + c_yx y_{t-2} + e`, `y_t = a y_{t-1} + c_xy x_{t-2} + e`
/// with a = 0.5 and standard normal shocks.
pub fn coupled_pair(rng: &mut impl Rng, t: usize, c_xy: f64, c_yx: f64) -> (Vec<f64>, Vec<f64>) {
    let n = t + BURN_IN;
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for i in 0..n {
        let (ex, ey): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
        let (x1, y1) = if i >= 1 { (x[i - 1], y[i - 1]) } else { (0.0, 0.0) };
        let (x2, y2) = if i >= 2 { (x[i - 2], y[i - 2]) } else { (0.0, 0.0) };
        x[i] = 0.5 * x1 + c_yx * y2 + ex;
        y[i] = 0.5 * y1 + c_xy * x2 + ey;
    }
    (x.split_off(BURN_IN), y.split_off(BURN_IN))
}

/// `n_units` independent coupled pairs of length `t`.
pub fn coupled_panel(n_units: usize, t: usize, c_xy: f64, c_yx: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_units).map(|_| coupled_pair(&mut rng, t, c_xy, c_yx)).collect()
}

/// A lag-2 dependence of `to` on `from`, optionally in one group only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub from: String,
    pub to: String,
    pub coef: f64,
    pub group: Option<Outcome>,
}

/// Panel over all eleven variables: AR(1) noise with coefficient 0.3 plus
/// the planted couplings. Every month is active.
pub fn planted_panel(per_group: usize, months: usize, couplings: &[Coupling], seed: u64) -> PanelSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<&str> = panel::all_vars().collect();
    let mut projects = Vec::new();
    for outcome in Outcome::ALL {
        for p in 0..per_group {
            let n = months + BURN_IN;
            let mut data = vec![vec![0.0; n]; vars.len()];
            for t in 0..n {
                for (v, name) in vars.iter().enumerate() {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    let mut val = e + if t >= 1 { 0.3 * data[v][t - 1] } else { 0.0 };
                    if t >= 2 {
                        for c in couplings.iter().filter(|c| c.to == *name && c.group.is_none_or(|g| g == outcome)) {
                            if let Some(src) = vars.iter().position(|x| *x == c.from) {
                                val += c.coef * data[src][t - 2];
                            }
                        }
                    }
                    data[v][t] = val;
                }
            }
            projects.push(ProjectSeries {
                project_id: format!("{}-{p:03}", outcome.as_str()),
                outcome,
                inactive: vec![false; months],
                values: vars
                    .iter()
                    .zip(data)
                    .map(|(name, mut s)| (name.to_string(), s.split_off(BURN_IN)))
                    .collect(),
            });
        }
    }
    PanelSeries::new(projects).expect("generated panel is rectangular")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpusConfig {
    pub projects: usize,
    pub months: u32,
    pub developers: usize,
    /// Mean new threads per project-month.
    pub threads_per_month: f64,
    pub commits_per_month: f64,
    /// Share of additional messages sent by automated senders.
    pub bot_fraction: f64,
    /// Probability that a body sentence is an institutional statement.
    pub is_rate: f64,
    /// Probability that a month has no human mail or commits.
    pub quiet_month_rate: f64,
}

impl Default for SynthCorpusConfig {
    fn default() -> Self {
        Self {
            projects: 3,
            months: 18,
            developers: 6,
            threads_per_month: 6.0,
            commits_per_month: 8.0,
            bot_fraction: 0.1,
            is_rate: 0.2,
            quiet_month_rate: 0.08,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub projects: usize,
    pub emails: usize,
    pub bot_emails: usize,
    pub commits: usize,
    pub gold_sentences: usize,
    pub gold_positive: usize,
}

const NAMES: &[&str] = &[
    "Ada", "Bruno", "Chen", "Dana", "Emeka", "Fatima", "Goran", "Hana", "Ivan", "Jia", "Kofi", "Lena",
];
const PROJECT_NAMES: &[&str] = &["aurora", "basalt", "cobalt", "dune", "ember", "fjord", "garnet", "harbor"];

struct Dev {
    name: String,
    address: String,
}

fn body_sentences(rng: &mut ChaCha8Rng, is_rate: f64, positives: &mut BTreeSet<String>) -> Vec<String> {
    let n = rng.gen_range(2..=5);
    (0..n)
        .map(|_| {
            if rng.gen::<f64>() < is_rate {
                let tpl = IS_TEMPLATES.choose(rng).unwrap();
                let s = fill(rng, tpl);
                positives.insert(s.clone());
                s
            } else {
                let tpl = FILLER_TEMPLATES.choose(rng).unwrap();
                fill(rng, tpl)
            }
        })
        .collect()
}

/// Write a complete synthetic corpus under `root`: `projects.csv`,
/// `roster.csv`, `<project>/dev/*.mbox`, `<project>/commits.jsonl` and a
/// sentence-level `gold.jsonl`.
pub fn write_synthetic_corpus(root: &Path, cfg: &SynthCorpusConfig, seed: u64) -> std::io::Result<SynthSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fs::create_dir_all(root)?;
    let mut summary = SynthSummary {
        projects: cfg.projects,
        ..Default::default()
    };
    let mut projects_csv = String::from("project_id,outcome,incubation_start,incubation_end\n");
    let mut roster_csv = String::from("project_id,identity_key,role,since\n");
    let mut gold = String::new();
    let mut positives = BTreeSet::new();

    for p in 0..cfg.projects {
        let pid = match PROJECT_NAMES.get(p) {
            Some(n) => n.to_string(),
            None => format!("project{p}"),
        };
        let outcome = if p % 3 == 2 { Outcome::Retired } else { Outcome::Graduated };
        let start = NaiveDate::from_ymd_opt(2014 + (p % 4) as i32, 1 + (p % 12) as u32, 10).unwrap();
        let end = start + Months::new(cfg.months) - Duration::days(12);
        writeln!(projects_csv, "{pid},{},{start},{end}", outcome.as_str()).unwrap();

        let devs: Vec<Dev> = (0..cfg.developers)
            .map(|i| {
                let name = NAMES[(p * 5 + i) % NAMES.len()].to_string();
                let address = format!("{}{}@{pid}.example.org", name.to_lowercase(), i);
                Dev { name, address }
            })
            .collect();
        for (i, d) in devs.iter().enumerate() {
            let role = match i {
                0 => "mentor",
                1 | 2 => "committer",
                _ => continue,
            };
            writeln!(roster_csv, "{pid},{},{role},", d.address).unwrap();
        }
        let committers = &devs[..3.min(devs.len())];
        let list_addr = format!("dev@{pid}.apache.org");

        let mut mbox = String::new();
        let mut commits = String::new();
        let mut msg_no = 0usize;
        for m in 0..cfg.months {
            let month_start = Utc.from_utc_datetime(&(start + Months::new(m)).and_hms_opt(0, 0, 0).unwrap());
            // retired projects fade out
            let scale = match outcome {
                Outcome::Graduated => 1.0,
                Outcome::Retired => (1.0 - 0.7 * m as f64 / cfg.months as f64).max(0.2),
            };
            let seasonal = 1.0 + 0.4 * ((m as f64) * 0.9 + p as f64).sin();
            let quiet = rng.gen_bool(cfg.quiet_month_rate.clamp(0.0, 1.0));
            let lam = (cfg.threads_per_month * scale * seasonal).max(0.1);
            let mut threads = Poisson::new(lam).unwrap().sample(&mut rng) as usize;
            if quiet {
                threads = 0;
            }
            for _ in 0..threads {
                let subject = SUBJECTS.choose(&mut rng).unwrap().to_string();
                let replies = rng.gen_range(0..=3);
                let mut chain: Vec<(String, usize, Vec<String>)> = Vec::new();
                // threads finish inside their month
                let mut at = month_start + Duration::minutes(rng.gen_range(0..60 * 24 * 20));
                for r in 0..=replies {
                    let who = rng.gen_range(0..devs.len());
                    let sentences = body_sentences(&mut rng, cfg.is_rate, &mut positives);
                    let id = format!("<{pid}.{msg_no}@{pid}.example.org>");
                    msg_no += 1;
                    let mut headers = format!(
                        "From {} {}\nFrom: {} <{}>\nTo: {list_addr}\n",
                        devs[who].address,
                        at.format("%a %b %e %H:%M:%S %Y"),
                        devs[who].name,
                        devs[who].address
                    );
                    if let Some((parent_id, parent_who, _)) = chain.last() {
                        if rng.gen_bool(0.4) {
                            writeln!(headers, "Cc: {}", devs[*parent_who].address).unwrap();
                        }
                        writeln!(headers, "In-Reply-To: {parent_id}").unwrap();
                        let refs: Vec<&str> = chain.iter().map(|c| c.0.as_str()).collect();
                        writeln!(headers, "References: {}", refs.join(" ")).unwrap();
                    }
                    let subj = if r == 0 { subject.clone() } else { format!("Re: {subject}") };
                    write!(
                        headers,
                        "Subject: {subj}\nDate: {}\nMessage-ID: {id}\nContent-Type: text/plain; charset=utf-8\n\n",
                        at.to_rfc2822()
                    )
                    .unwrap();
                    let mut body = sentences.join("\n");
                    body.push('\n');
                    if let Some((_, parent_who, parent_sentences)) = chain.last() {
                        writeln!(body, "\nOn an earlier day {} wrote:", devs[*parent_who].name).unwrap();
                        for s in parent_sentences {
                            writeln!(body, "> {s}").unwrap();
                        }
                    }
                    for (i, s) in split_sentences(&strip_quoted(&body)).iter().enumerate() {
                        let label = u8::from(positives.contains(s.text.trim()));
                        summary.gold_sentences += 1;
                        summary.gold_positive += label as usize;
                        writeln!(gold, "{}", json!({"email_id": id, "sentence_index": i, "label": label})).unwrap();
                    }
                    mbox.push_str(&headers);
                    mbox.push_str(&body);
                    mbox.push('\n');
                    summary.emails += 1;
                    chain.push((id, who, sentences));
                    at += Duration::minutes(rng.gen_range(10..60 * 24));
                }
            }
            let bots = Poisson::new((lam * cfg.bot_fraction * 2.0).max(1e-3)).unwrap().sample(&mut rng) as usize;
            for b in 0..bots {
                let at = month_start + Duration::minutes(rng.gen_range(0..60 * 24 * 26));
                write!(
                    mbox,
                    "From jenkins@builds.apache.org {}\nFrom: Apache Jenkins Server <jenkins@builds.apache.org>\nTo: {list_addr}\nSubject: Build failed in Jenkins: {pid}-nightly #{}\nDate: {}\nMessage-ID: <build.{pid}.{m}.{b}@builds.apache.org>\n\nSee the console output for details.\n\n",
                    at.format("%a %b %e %H:%M:%S %Y"),
                    m * 10 + b as u32,
                    at.to_rfc2822()
                )
                .unwrap();
                summary.emails += 1;
                summary.bot_emails += 1;
            }

            let mut n_commits = Poisson::new((cfg.commits_per_month * scale * seasonal).max(0.1))
                .unwrap()
                .sample(&mut rng) as usize;
            if quiet {
                n_commits = 0;
            }
            for c in 0..n_commits {
                let who = &committers[rng.gen_range(0..committers.len())];
                let at = month_start + Duration::minutes(rng.gen_range(0..60 * 24 * 26));
                let n_files = rng.gen_range(1..=4);
                let mut files: Vec<String> = (0..n_files)
                    .map(|_| format!("src/main/java/org/{pid}/Module{}.java", rng.gen_range(0..15)))
                    .collect();
                if rng.gen_bool(0.2) {
                    files.push("README.md".into());
                }
                let id = format!("{:040x}", (p as u128) << 64 | (m as u128) << 32 | c as u128);
                writeln!(
                    commits,
                    "{}",
                    json!({"id": id, "author": who.name, "email": who.address, "date": at.to_rfc3339(), "files": files})
                )
                .unwrap();
                summary.commits += 1;
            }
        }
        let list_dir = root.join(&pid).join("dev");
        fs::create_dir_all(&list_dir)?;
        fs::write(list_dir.join("archive.mbox"), mbox)?;
        fs::write(root.join(&pid).join("commits.jsonl"), commits)?;
    }
    fs::write(root.join("projects.csv"), projects_csv)?;
    fs::write(root.join("roster.csv"), roster_csv)?;
    fs::write(root.join("gold.jsonl"), gold)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_corpus_has_exact_positive_count() {
        let segs = separable_is_corpus(500, 0.05, 1);
        let n: usize = segs.iter().map(Segment::len).sum();
        let pos: usize = segs.iter().flat_map(|s| &s.labels).filter(|&&l| l).count();
        assert_eq!((n, pos), (500, 25));
    }

    #[test]
    fn planted_words_are_alphabetic_and_disjoint() {
        assert_eq!(planted_word(0, 27), "topawordbb");
        assert_ne!(planted_word(1, 0), planted_word(0, 1));
        let (docs, topics) = planted_topic_corpus(&PlantedTopics::default(), 3);
        assert_eq!(docs.len(), 200);
        assert!(docs[1].iter().all(|w| w.starts_with("topb")));
        assert_eq!(topics[1], 1);
    }

    #[test]
    fn coupled_panel_is_seeded() {
        assert_eq!(coupled_panel(2, 30, 0.8, 0.0, 5), coupled_panel(2, 30, 0.8, 0.0, 5));
        assert_eq!(coupled_panel(2, 30, 0.8, 0.0, 5)[0].0.len(), 30);
    }
}
