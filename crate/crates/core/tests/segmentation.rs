use std::collections::BTreeMap;

use chrono::NaiveDate;
use proptest::prelude::*;
use stsgov_core::ingest::{Email, ProjectManifest, Role, RosterEntry, SentenceRecord};
use stsgov_core::is_extract::{
    aggregate_predictions, count_is_by_role, evaluate, oversample_training, segment_email, window_ranges,
    EvalReport, Segment,
};
use stsgov_core::panel::Outcome;

#[path = "support/or_fixture.rs"]
mod or_fixture;
use or_fixture::OR_FIXTURE;

const BUDGET: usize = 256;

fn sentences(id: &str, counts: &[usize]) -> Vec<SentenceRecord> {
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| SentenceRecord {
            email_id: id.into(),
            index: i,
            text: format!("s{i}"),
            start: 0,
            end: 0,
            token_count: c,
            gold_label: None,
            predicted_label: None,
        })
        .collect()
}

#[test]
fn or_aggregation_fixture() {
    let mut segments = Vec::new();
    let mut expected = BTreeMap::new();
    for (k, (counts, preds, want)) in OR_FIXTURE.iter().enumerate() {
        let id = format!("<e{k:02}@x>");
        let mut segs = segment_email(&sentences(&id, counts), BUDGET);
        assert_eq!(segs.len(), preds.len(), "email {k}");
        for (s, p) in segs.iter_mut().zip(preds.iter()) {
            assert_eq!(s.len(), p.len(), "email {k}");
            s.predicted = Some(p.iter().map(|&x| x == 1).collect());
        }
        segments.extend(segs);
        expected.insert(id, want.iter().map(|&x| x == 1).collect::<Vec<bool>>());
    }
    assert_eq!(expected.len(), 20);
    assert_eq!(aggregate_predictions(&segments).unwrap(), expected);
}

#[test]
fn window_examples() {
    assert_eq!(window_ranges(&[100, 100, 100, 100], BUDGET), vec![0..2, 1..3, 2..4]);
    assert_eq!(window_ranges(&[300], BUDGET), vec![0..1]);
    assert_eq!(window_ranges(&[50, 50, 50], BUDGET), vec![0..3]);
    assert!(window_ranges(&[], BUDGET).is_empty());
}

fn segment(labels: &[bool], id: usize) -> Segment {
    Segment {
        email_id: format!("<{id}@x>"),
        start: 0,
        texts: labels.iter().enumerate().map(|(i, _)| format!("t{id}.{i}")).collect(),
        total_tokens: 0,
        labels: labels.to_vec(),
        predicted: None,
    }
}

#[test]
fn oversampling_examples() {
    let make = |neg: usize, pos: usize| -> Vec<Segment> {
        (0..neg)
            .map(|i| segment(&[false, false], i))
            .chain((0..pos).map(|i| segment(&[false, true], 100 + i)))
            .collect()
    };
    let count = |s: &[Segment]| (s.iter().filter(|x| !x.has_positive()).count(), s.iter().filter(|x| x.has_positive()).count());
    assert_eq!(count(&oversample_training(&make(10, 2), 1).unwrap()), (10, 10));
    assert_eq!(oversample_training(&make(5, 5), 1).unwrap(), make(5, 5));
    assert_eq!(oversample_training(&make(3, 7), 1).unwrap(), make(3, 7));
}

#[test]
fn evaluation_examples() {
    let r = EvalReport::from_counts(29, 14, 13, 0);
    assert!((r.precision - 29.0 / 43.0).abs() < 1e-12 && (r.precision - 0.674).abs() < 1e-3);
    assert!((r.recall - 29.0 / 42.0).abs() < 1e-12 && (r.recall - 0.690).abs() < 1e-3);
    let gold: Vec<bool> = (0..100).map(|i| i < 5).collect();
    let r = evaluate(&gold, &[false; 100]).unwrap();
    assert_eq!((r.precision, r.recall, r.accuracy), (0.0, 0.0, 0.95));
    let r = evaluate(&gold, &gold).unwrap();
    assert_eq!((r.precision, r.recall, r.f1, r.accuracy), (1.0, 1.0, 1.0, 1.0));
}

#[test]
fn role_changes_attribute_per_month() {
    let mut m = ProjectManifest::new(
        "p",
        Outcome::Graduated,
        NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
    )
    .unwrap();
    m.roster.push(RosterEntry {
        identity_key: "ann@x.org".into(),
        role: Role::Committer,
        since: NaiveDate::from_ymd_opt(2015, 2, 1),
    });
    let mk = |month: i32, positives: usize, negatives: usize, id: usize| {
        let mut s = sentences(&format!("<{id}@x>"), &vec![5; positives + negatives]);
        for (i, x) in s.iter_mut().enumerate() {
            x.predicted_label = Some(i < positives);
        }
        Email {
            message_id: format!("<{id}@x>"),
            project_id: "p".into(),
            list: "dev".into(),
            sent_at: chrono::Utc::now(),
            month_index: month,
            sender: "ann@x.org".into(),
            in_reply_to: None,
            references: vec![],
            parent_id: None,
            parent_sender: None,
            thread_id: "t".into(),
            recipients: vec![],
            direct_recipients: vec![],
            subject: String::new(),
            body: String::new(),
            is_bot: false,
            sentences: s,
        }
    };
    let counts = count_is_by_role(&[mk(0, 2, 1, 0), mk(1, 3, 0, 1), mk(2, 0, 4, 2)], &m);
    assert_eq!((counts[&0].contributor, counts[&0].committer), (2, 0));
    assert_eq!((counts[&1].contributor, counts[&1].committer), (0, 3));
    assert_eq!(counts[&2].total(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn windows_cover_fit_and_advance(counts in prop::collection::vec(1usize..400, 1..40)) {
        let w = window_ranges(&counts, BUDGET);
        let n = counts.len();
        for (i, r) in w.iter().enumerate() {
            prop_assert_eq!(r.start, i);
            prop_assert!(r.end > r.start);
            let sum: usize = counts[r.clone()].iter().sum();
            if r.len() > 1 {
                prop_assert!(sum <= BUDGET);
            }
            // maximal: the next sentence would not fit
            if r.end < n {
                prop_assert!(sum + counts[r.end] > BUDGET);
            }
        }
        prop_assert_eq!(w.last().unwrap().end, n);
        let mut covered = vec![false; n];
        for r in &w {
            for c in &mut covered[r.clone()] {
                *c = true;
            }
        }
        prop_assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn or_of_true_labels_reproduces_them(
        counts in prop::collection::vec(1usize..300, 1..25),
        seed in any::<u64>(),
    ) {
        let labels: Vec<bool> = (0..counts.len()).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let mut segs = segment_email(&sentences("<e@x>", &counts), BUDGET);
        for s in &mut segs {
            s.predicted = Some(labels[s.sentence_indices()].to_vec());
        }
        prop_assert_eq!(&aggregate_predictions(&segs).unwrap()["<e@x>"], &labels);
    }

    #[test]
    fn flipping_unanimous_segments_flips_labels(
        counts in prop::collection::vec(1usize..300, 1..25),
        bits in prop::collection::vec(any::<bool>(), 60),
    ) {
        let mut segs = segment_email(&sentences("<e@x>", &counts), BUDGET);
        let mut k = 0;
        for s in &mut segs {
            let p: Vec<bool> = (0..s.len()).map(|j| bits[(k + j) % bits.len()]).collect();
            k += s.len();
            s.predicted = Some(p);
        }
        let before = aggregate_predictions(&segs).unwrap()["<e@x>"].clone();
        let mut votes: Vec<Vec<bool>> = vec![Vec::new(); counts.len()];
        for s in &segs {
            for (i, &p) in s.sentence_indices().zip(s.predicted.as_ref().unwrap()) {
                votes[i].push(p);
            }
        }
        for s in &mut segs {
            for p in s.predicted.as_mut().unwrap() {
                *p = !*p;
            }
        }
        let after = aggregate_predictions(&segs).unwrap()["<e@x>"].clone();
        for i in 0..counts.len() {
            if votes[i].iter().all(|&v| v == votes[i][0]) {
                prop_assert_eq!(after[i], !before[i]);
            }
        }
    }

    #[test]
    fn oversampling_only_duplicates_positives(
        kinds in prop::collection::vec(any::<bool>(), 1..40),
        seed in any::<u64>(),
    ) {
        prop_assume!(kinds.iter().any(|&k| k));
        let segs: Vec<Segment> = kinds.iter().enumerate().map(|(i, &p)| segment(&[p, false], i)).collect();
        let out = oversample_training(&segs, seed).unwrap();
        let neg_in: Vec<&Segment> = segs.iter().filter(|s| !s.has_positive()).collect();
        let neg_out: Vec<&Segment> = out.iter().filter(|s| !s.has_positive()).collect();
        prop_assert_eq!(&neg_in, &neg_out);
        prop_assert_eq!(&out[..segs.len()], &segs[..]);
        for extra in &out[segs.len()..] {
            prop_assert!(extra.has_positive() && segs.contains(extra));
        }
        let pos_in = kinds.iter().filter(|&&k| k).count();
        let pos_out = out.iter().filter(|s| s.has_positive()).count();
        prop_assert_eq!(pos_out, pos_in.max(neg_out.len()));
    }

    #[test]
    fn evaluation_identities(gold in prop::collection::vec(any::<bool>(), 1..200), flip in any::<u64>()) {
        let pred: Vec<bool> = gold.iter().enumerate().map(|(i, &g)| g ^ ((flip >> (i % 64)) & 1 == 1)).collect();
        let r = evaluate(&gold, &pred).unwrap();
        prop_assert_eq!(r.total(), gold.len());
        prop_assert!((r.accuracy - (r.tp + r.tn) as f64 / r.total() as f64).abs() <= 1e-12);
        if r.precision + r.recall > 0.0 {
            let f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
            prop_assert!((r.f1 - f1).abs() <= 1e-12);
        } else {
            prop_assert_eq!(r.f1, 0.0);
        }
    }
}
