use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use stsgov_core::panel::{self, Outcome, PanelSeries, ProjectSeries};
use stsgov_core::stats::{
    adf_test, bh_adjust, edge_list, granger_f_test, granger_pair, granger_panel, mann_whitney_u, run_grid,
    trim_outliers, GrangerEdge, GridConfig, PanelTestOptions,
};
use stsgov_core::synth::{coupled_pair, planted_panel, Coupling};

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Adjusted p-values straight from the definition: the minimum over all
/// ranks at or above this one of p_(j) · m / j, capped at 1.
fn brute_bh(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    for (r, &i) in order.iter().enumerate() {
        let best = (r..m)
            .map(|j| p[order[j]] * m as f64 / (j + 1) as f64)
            .fold(f64::INFINITY, f64::min);
        out[i] = best.min(1.0);
    }
    out
}

#[test]
fn bh_examples() {
    let adj = |p: &[f64]| bh_adjust(p).unwrap().iter().map(|a| a.adjusted_p).collect::<Vec<_>>();
    let close = |a: Vec<f64>, b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
    assert!(close(adj(&[0.01, 0.02, 0.03, 0.04]), &[0.04; 4]));
    assert!(close(adj(&[1.0]), &[1.0]));
    assert!(close(adj(&[0.001, 0.8]), &[0.002, 0.8]));
    assert!(bh_adjust(&[1.2]).is_err());
}

/// All C(m+n, m) placements of the a-sample among ranks 1..=m+n.
fn placements(m: usize, n: usize) -> Vec<Vec<bool>> {
    (0u32..1 << (m + n))
        .filter(|mask| mask.count_ones() as usize == m)
        .map(|mask| (0..m + n).map(|i| mask >> i & 1 == 1).collect())
        .collect()
}

#[test]
fn exact_mann_whitney_matches_enumeration() {
    for total in 2..=10usize {
        for m in 1..total {
            let n = total - m;
            let all = placements(m, n);
            let u_of = |pl: &[bool]| -> usize {
                // pairs (a, b) with a ranked above b
                let mut u = 0;
                let mut bs = 0;
                for &is_a in pl {
                    if is_a {
                        u += bs;
                    } else {
                        bs += 1;
                    }
                }
                u
            };
            let us: Vec<usize> = all.iter().map(|p| u_of(p)).collect();
            for (pl, &u) in all.iter().zip(&us) {
                let a: Vec<f64> = pl.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i as f64).collect();
                let b: Vec<f64> = pl.iter().enumerate().filter(|(_, &x)| !x).map(|(i, _)| i as f64).collect();
                let lower = us.iter().filter(|&&v| v <= u).count() as f64 / us.len() as f64;
                let upper = us.iter().filter(|&&v| v >= u).count() as f64 / us.len() as f64;
                let want = (2.0 * lower.min(upper)).min(1.0);
                let got = mann_whitney_u(&a, &b).unwrap();
                assert!(got.exact);
                assert_eq!(got.u, u as f64);
                assert!((got.p_value - want).abs() < 1e-12, "m={m} n={n} u={u}");
            }
        }
    }
}

#[test]
fn mann_whitney_examples() {
    let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
    assert_eq!(r.u, 0.0);
    assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(mann_whitney_u(&[2.0, 4.0, 6.0], &[2.0, 4.0, 6.0]).unwrap().p_value, 1.0);
    let a = normals(1, 50);
    let b: Vec<f64> = normals(2, 50).iter().map(|x| x + 3.0).collect();
    assert!(mann_whitney_u(&a, &b).unwrap().p_value < 1e-6);
}

/// Solve (XᵀX) β = Xᵀy by Gaussian elimination and return the residual sum
/// of squares.
fn normal_equations_rss(cols: &[Vec<f64>], y: &[f64]) -> f64 {
    let p = cols.len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = cols[i].iter().zip(&cols[j]).map(|(x, z)| x * z).sum();
        }
        a[i][p] = cols[i].iter().zip(y).map(|(x, z)| x * z).sum();
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
    y.iter()
        .enumerate()
        .map(|(t, &v)| {
            let fit: f64 = (0..p).map(|j| beta[j] * cols[j][t]).sum();
            (v - fit).powi(2)
        })
        .sum()
}

fn oracle_wald(x: &[f64], y: &[f64], k: usize) -> f64 {
    let t = y.len();
    let target: Vec<f64> = y[k..].to_vec();
    let mut cols = vec![vec![1.0; t - k]];
    for l in 1..=k {
        cols.push((k..t).map(|i| y[i - l]).collect());
    }
    let rss_r = normal_equations_rss(&cols, &target);
    for l in 1..=k {
        cols.push((k..t).map(|i| x[i - l]).collect());
    }
    let rss_u = normal_equations_rss(&cols, &target);
    (rss_r - rss_u) / rss_u * (t - k - 2 * k - 1) as f64
}

#[test]
fn granger_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (x, y) = coupled_pair(&mut rng, 300, 0.8, 0.0);
    assert!(granger_f_test(&x, &y, 2).unwrap().p_value < 0.01);
    assert!(granger_f_test(&y, &x, 2).unwrap().p_value > 0.05);
    assert!(granger_pair(&vec![0.0; 100], &y[..100], 2).is_err());

    let units: Vec<(&[f64], &[f64])> = vec![(&x, &y), (&x[..5], &y[..5])];
    assert!(granger_panel("x", "y", &units, 2, PanelTestOptions::default()).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..10).map(|_| coupled_pair(&mut rng, 100, 0.8, 0.0)).collect();
    let units: Vec<(&[f64], &[f64])> = pairs.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect();
    assert!(granger_panel("x", "y", &units, 2, PanelTestOptions::default()).unwrap().p_value < 0.01);
}

fn grid_config() -> GridConfig {
    GridConfig {
        is_vars: panel::IS_VARS.iter().map(|s| s.to_string()).collect(),
        ..GridConfig::default()
    }
}

fn edge(from: &str, to: &str, bidirectional: bool) -> GrangerEdge {
    GrangerEdge {
        from: from.into(),
        to: to.into(),
        bidirectional,
    }
}

#[test]
fn grid_recovers_one_planted_edge() {
    let c = vec![Coupling {
        from: panel::NUM_IS_MENTOR.into(),
        to: panel::S_NUM_NODES.into(),
        coef: 0.8,
        group: Some(Outcome::Graduated),
    }];
    let rows = run_grid(&planted_panel(20, 100, &c, 5), &grid_config()).unwrap();
    assert_eq!(rows.len(), 72);
    assert_eq!(
        edge_list(&rows, Outcome::Graduated),
        vec![edge(panel::NUM_IS_MENTOR, panel::S_NUM_NODES, false)]
    );
    assert!(edge_list(&rows, Outcome::Retired).is_empty());
}

#[test]
fn grid_reports_bidirectional_edge() {
    let c: Vec<Coupling> = [(panel::NUM_IS_COMMITTER, panel::T_NUM_DEV_NODES), (panel::T_NUM_DEV_NODES, panel::NUM_IS_COMMITTER)]
        .iter()
        .map(|(f, t)| Coupling {
            from: f.to_string(),
            to: t.to_string(),
            coef: 0.4,
            group: None,
        })
        .collect();
    let rows = run_grid(&planted_panel(20, 100, &c, 6), &grid_config()).unwrap();
    for g in Outcome::ALL {
        assert_eq!(
            edge_list(&rows, g),
            vec![edge(panel::NUM_IS_COMMITTER, panel::T_NUM_DEV_NODES, true)],
            "{g}"
        );
    }
}

#[test]
fn noise_grid_has_no_edges() {
    let rows = run_grid(&planted_panel(20, 100, &[], 8), &grid_config()).unwrap();
    assert!(rows.iter().all(|r| r.result.is_some()));
    let significant = rows.iter().filter(|r| r.adjusted.is_some_and(|a| a.significant)).count();
    assert_eq!(significant, 0);
}

fn single_var_panel(values: Vec<f64>) -> PanelSeries {
    PanelSeries::new(vec![ProjectSeries {
        project_id: "p".into(),
        outcome: Outcome::Graduated,
        inactive: vec![false; values.len()],
        values: [("v".to_string(), values)].into(),
    }])
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bh_matches_definition(p in prop::collection::vec(0.0f64..=1.0, 1..60)) {
        let got = bh_adjust(&p).unwrap();
        for (g, want) in got.iter().zip(brute_bh(&p)) {
            prop_assert!((g.adjusted_p - want).abs() <= 1e-12);
            prop_assert!(g.adjusted_p >= g.raw_p - 1e-15 && g.adjusted_p <= 1.0);
        }
        let mut pairs: Vec<(f64, f64)> = got.iter().map(|a| (a.raw_p, a.adjusted_p)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn adf_is_affine_invariant(seed in any::<u64>(), scale in 0.1f64..10.0, shift in -100.0f64..100.0, walk in any::<bool>()) {
        let mut s = normals(seed, 120);
        if walk {
            for i in 1..s.len() {
                s[i] += s[i - 1];
            }
        }
        let t: Vec<f64> = s.iter().map(|x| scale * x + shift).collect();
        let (a, b) = (adf_test(&s, None).unwrap(), adf_test(&t, None).unwrap());
        prop_assert!((a.statistic - b.statistic).abs() <= 1e-8 * a.statistic.abs().max(1.0));
    }

    #[test]
    fn granger_is_affine_invariant_and_matches_oracle(
        seed in any::<u64>(),
        c in 0.0f64..1.0,
        ax in 0.1f64..10.0,
        bx in -50.0f64..50.0,
        ay in 0.1f64..10.0,
        by in -50.0f64..50.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = coupled_pair(&mut rng, 80, c, 0.0);
        let w = granger_pair(&x, &y, 2).unwrap();
        let oracle = oracle_wald(&x, &y, 2);
        prop_assert!((w - oracle).abs() <= 1e-8 * w.abs().max(1.0), "{} vs {}", w, oracle);
        let x2: Vec<f64> = x.iter().map(|v| ax * v + bx).collect();
        let y2: Vec<f64> = y.iter().map(|v| ay * v + by).collect();
        let w2 = granger_pair(&x2, &y2, 2).unwrap();
        prop_assert!((w - w2).abs() <= 1e-8 * w.abs().max(1.0));
    }

    #[test]
    fn trim_removes_few(values in prop::collection::vec(0u8..30, 1..300), f in 0.001f64..0.49) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let t = trim_outliers(&single_var_panel(v.clone()), f).unwrap();
        let removed = t.projects()[0].get("v").unwrap().iter().filter(|x| x.is_nan()).count();
        prop_assert!(removed <= (f * v.len() as f64).ceil() as usize + 1);
    }
}

