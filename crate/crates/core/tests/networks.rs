use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use stsgov_core::ingest::{Commit, Email};
use stsgov_core::stnet::{
    build_social_net, build_tech_net, social_metrics, social_metrics_indexed, tech_metrics, MonthlySocialNet,
};

/// Local clustering averaged over nodes, by triple enumeration on an
/// adjacency matrix.
fn brute_clustering(n: usize, und: &[Vec<bool>]) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for v in 0..n {
        let (mut triples, mut closed) = (0usize, 0usize);
        for a in 0..n {
            for b in a + 1..n {
                if a != v && b != v && und[v][a] && und[v][b] {
                    triples += 1;
                    if und[a][b] {
                        closed += 1;
                    }
                }
            }
        }
        if triples > 0 {
            total += closed as f64 / triples as f64;
        }
    }
    total / n as f64
}

fn undirected(n: usize, edges: &[(usize, usize, u32)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b, _) in edges {
        m[a][b] = true;
        m[b][a] = true;
    }
    m
}

fn check(n: usize, edges: &[(usize, usize, u32)]) {
    let got = social_metrics_indexed(n, edges);
    let und = undirected(n, edges);
    assert_eq!(got.num_nodes, n as f64);
    let density = if n < 2 { 0.0 } else { edges.len() as f64 / (n * (n - 1)) as f64 };
    assert!((got.graph_density - density).abs() <= 1e-12);
    assert!((got.avg_clustering_coef - brute_clustering(n, &und)).abs() <= 1e-12);
    let mut degree = vec![0u64; n];
    for &(a, b, w) in edges {
        degree[a] += w as u64;
        degree[b] += w as u64;
    }
    let wmd = degree.iter().sum::<u64>() as f64 / n as f64;
    assert!((got.weighted_mean_degree - wmd).abs() <= 1e-12);
}

#[test]
fn every_small_graph_matches_brute_force() {
    // all undirected graphs on up to 6 nodes; orientation and weight vary with
    // the edge mask so one- and two-way links both occur
    for n in 1..=6usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let mut edges = Vec::new();
            for (i, &(a, b)) in pairs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    let w = 1 + (mask >> (i % 5)) % 3;
                    match (mask as usize + i) % 3 {
                        0 => edges.push((a, b, w)),
                        1 => edges.push((b, a, w)),
                        _ => {
                            edges.push((a, b, w));
                            edges.push((b, a, 1));
                        }
                    }
                }
            }
            check(n, &edges);
        }
    }
}

#[test]
fn every_directed_graph_on_four_nodes() {
    let arcs: Vec<(usize, usize)> = (0..4).flat_map(|a| (0..4).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    for mask in 0u32..(1 << arcs.len()) {
        let edges: Vec<(usize, usize, u32)> = arcs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(i, &(a, b))| (a, b, 1 + i as u32 % 4))
            .collect();
        check(4, &edges);
    }
}

fn email(id: usize, sender: &str, parent: Option<&str>, month: i32) -> Email {
    Email {
        message_id: format!("<m{id}@x>"),
        project_id: "p".into(),
        list: "dev".into(),
        sent_at: Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap() + chrono::Duration::minutes(id as i64),
        month_index: month,
        sender: sender.into(),
        in_reply_to: None,
        references: vec![],
        parent_id: parent.map(|_| "<parent@x>".into()),
        parent_sender: parent.map(String::from),
        thread_id: "t".into(),
        recipients: vec![],
        direct_recipients: vec![],
        subject: "s".into(),
        body: String::new(),
        is_bot: false,
        sentences: vec![],
    }
}

fn commit(id: usize, author: &str, files: &[&str], month: i32) -> Commit {
    Commit {
        commit_id: format!("c{id}"),
        project_id: "p".into(),
        authored_at: Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap(),
        month_index: month,
        author: author.into(),
        files: files.iter().map(|s| s.to_string()).collect(),
        is_bot: false,
    }
}

#[test]
fn documented_examples() {
    let empty = build_social_net("p", &[], 0);
    assert_eq!(social_metrics(&empty).num_nodes, 0.0);

    let e = vec![
        email(0, "a", None, 0),
        email(1, "b", Some("a"), 0),
        email(2, "b", Some("a"), 0),
        email(3, "c", Some("b"), 0),
    ];
    let net = build_social_net("p", &e, 0);
    assert_eq!(net.edges[&("a".to_string(), "b".to_string())], 2);
    assert_eq!(net.edges[&("b".to_string(), "c".to_string())], 1);
    assert!((social_metrics(&net).graph_density - 1.0 / 3.0).abs() < 1e-12);

    let mut single = MonthlySocialNet::new("p", 0);
    single.add_edge("a", "b");
    single.add_edge("a", "b");
    assert_eq!(social_metrics(&single).weighted_mean_degree, 2.0);

    let t = build_tech_net("p", &[commit(0, "d", &["x.java", "y.java", "z.java"], 0)], 0);
    let m = tech_metrics(&t);
    assert_eq!((t.edges.len(), m.graph_density), (3, 1.0));
    let many: Vec<Commit> = (0..4).map(|i| commit(i, "d", &["f.java"], 0)).collect();
    assert_eq!(build_tech_net("p", &many, 0).edges[&("d".to_string(), "f.java".to_string())], 4);
    let files: Vec<String> = (0..38).map(|i| format!("F{i}.java")).collect();
    let refs: Vec<&str> = files.iter().map(String::as_str).collect();
    assert_eq!(tech_metrics(&build_tech_net("p", &[commit(0, "d", &refs, 0)], 0)).num_file_per_dev, 38.0);
    assert_eq!(tech_metrics(&build_tech_net("p", &[], 0)), Default::default());
}

fn arb_replies() -> impl Strategy<Value = Vec<(u8, Option<u8>)>> {
    prop::collection::vec((0u8..10, prop::option::of(0u8..10)), 0..60)
}

fn emails_from(replies: &[(u8, Option<u8>)]) -> Vec<Email> {
    replies
        .iter()
        .enumerate()
        .map(|(i, (s, p))| {
            let parent = p.map(|p| format!("dev{p}"));
            email(i, &format!("dev{s}"), parent.as_deref(), 0)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ratios_stay_in_unit_interval(replies in arb_replies()) {
        let m = social_metrics(&build_social_net("p", &emails_from(&replies), 0));
        prop_assert!((0.0..=1.0).contains(&m.graph_density));
        prop_assert!((0.0..=1.0).contains(&m.avg_clustering_coef));
    }

    #[test]
    fn duplicate_reply_bumps_one_weight(replies in arb_replies(), s in 0u8..10, p in 0u8..10) {
        prop_assume!(s != p);
        let mut e = emails_from(&replies);
        e.push(email(999, &format!("dev{s}"), Some(&format!("dev{p}")), 0));
        e.push(email(1000, &format!("dev{s}"), Some(&format!("dev{p}")), 0));
        let once = {
            let mut x = e.clone();
            x.pop();
            build_social_net("p", &x, 0)
        };
        let twice = build_social_net("p", &e, 0);
        let changed: Vec<_> = twice.edges.iter().filter(|(k, w)| once.edges.get(*k) != Some(w)).collect();
        prop_assert_eq!(changed.len(), 1);
        prop_assert_eq!(twice.edges.len(), once.edges.len());
        let (a, b) = (social_metrics(&once), social_metrics(&twice));
        prop_assert_eq!(a.num_nodes, b.num_nodes);
        prop_assert_eq!(a.graph_density, b.graph_density);
        prop_assert_eq!(a.avg_clustering_coef, b.avg_clustering_coef);
    }

    #[test]
    fn metrics_ignore_record_order(replies in arb_replies(), rot in 0usize..60) {
        let e = emails_from(&replies);
        let mut r = e.clone();
        if !r.is_empty() {
            let k = rot % r.len();
            r.rotate_left(k);
            r.reverse();
        }
        prop_assert_eq!(build_social_net("p", &e, 0), build_social_net("p", &r, 0));
    }

    #[test]
    fn bipartite_edges_only_join_devs_to_files(
        commits in prop::collection::vec((0u8..6, prop::collection::vec(0u8..12, 0..5)), 0..40)
    ) {
        let cs: Vec<Commit> = commits
            .iter()
            .enumerate()
            .map(|(i, (d, fs))| {
                let files: Vec<String> = fs.iter().map(|f| format!("src/F{f}.java")).collect();
                let refs: Vec<&str> = files.iter().map(String::as_str).collect();
                commit(i, &format!("dev{d}"), &refs, 0)
            })
            .collect();
        let net = build_tech_net("p", &cs, 0);
        for (d, f) in net.edges.keys() {
            prop_assert!(net.dev_nodes.contains(d) && !net.file_nodes.contains(d));
            prop_assert!(net.file_nodes.contains(f) && !net.dev_nodes.contains(f));
        }
        let m = tech_metrics(&net);
        prop_assert!((0.0..=1.0).contains(&m.graph_density));
        let mut brute: BTreeMap<(String, String), u32> = BTreeMap::new();
        for c in &cs {
            let mut seen = std::collections::BTreeSet::new();
            for f in &c.files {
                if seen.insert(f) {
                    *brute.entry((c.author.clone(), f.clone())).or_default() += 1;
                }
            }
        }
        prop_assert_eq!(&net.edges, &brute);
        let mut rev = cs.clone();
        rev.reverse();
        prop_assert_eq!(build_tech_net("p", &rev, 0), net);
    }
}
