//! Markdown summary assembled from the `analyze` artifacts alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use crate::config::RunConfig;
use crate::manifest::{digest_tree, now};
use crate::pipeline::{
    analyze_dir, read_json, record_stage, stage, ClassifierEval, EdgeReport, PanelSummary, SummaryStats, TopicsReport,
};

pub const REPORT_FILE: &str = "report.md";

pub fn report_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join(REPORT_FILE)
}

#[derive(Debug, Clone, Deserialize)]
pub struct GroupTestCsv {
    pub variable: String,
    pub n_graduated: usize,
    pub n_retired: usize,
    pub mean_graduated: Option<f64>,
    pub mean_retired: Option<f64>,
    pub u: Option<f64>,
    pub p_value: Option<f64>,
    pub exact: Option<bool>,
}

pub fn read_group_tests(path: &Path) -> anyhow::Result<Vec<GroupTestCsv>> {
    if !path.exists() {
        bail!("missing upstream artifact {}", path.display());
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| path.display().to_string())?;
    r.deserialize()
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| path.display().to_string())
}

fn num(x: Option<f64>) -> String {
    match x {
        None => "n/a".into(),
        Some(v) if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) => format!("{v:.3e}"),
        Some(v) => format!("{v:.4}"),
    }
}

fn stats_cells(s: &SummaryStats) -> String {
    format!(
        "{} | {} | {} | {} | {} | {}",
        s.n,
        num(s.mean),
        num(s.sd),
        num(s.q1),
        num(s.median),
        num(s.q3)
    )
}

/// Render the report text; pure in its inputs.
pub fn render(
    summary: &PanelSummary,
    tests: &[GroupTestCsv],
    edges: &EdgeReport,
    eval: &ClassifierEval,
    topics: &TopicsReport,
) -> String {
    let mut o = String::new();
    let w = &mut o;
    writeln!(w, "# Socio-technical and governance summary\n").unwrap();
    writeln!(w, "- config hash: `{}`", summary.config_hash).unwrap();
    writeln!(w, "- seed: {}", summary.seed).unwrap();
    writeln!(w, "- outlier trim: {} per tail\n", summary.trim_fraction).unwrap();

    writeln!(w, "## Monthly variables\n").unwrap();
    writeln!(
        w,
        "Left block counts every project-month, right block skips inactive months.\n"
    )
    .unwrap();
    writeln!(
        w,
        "| variable | n | mean | sd | q1 | median | q3 | n | mean | sd | q1 | median | q3 |"
    )
    .unwrap();
    writeln!(w, "|---|{}", "---:|".repeat(12)).unwrap();
    for r in summary.groups.get("all").map(Vec::as_slice).unwrap_or_default() {
        writeln!(
            w,
            "| {} | {} | {} |",
            r.variable,
            stats_cells(&r.with_inactive),
            stats_cells(&r.without_inactive)
        )
        .unwrap();
    }

    writeln!(w, "\n## Graduated vs retired\n").unwrap();
    writeln!(w, "Mann-Whitney U over active project-months.\n").unwrap();
    writeln!(w, "| variable | n grad | n ret | mean grad | mean ret | U | p | exact |").unwrap();
    writeln!(w, "|---|---:|---:|---:|---:|---:|---:|---|").unwrap();
    for t in tests {
        writeln!(
            w,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            t.variable,
            t.n_graduated,
            t.n_retired,
            num(t.mean_graduated),
            num(t.mean_retired),
            num(t.u),
            num(t.p_value),
            t.exact.map_or("n/a".to_string(), |e| e.to_string())
        )
        .unwrap();
    }

    writeln!(
        w,
        "\n## Granger causality edges\n\nLag {}, Benjamini-Hochberg adjusted p < {}; {} of {} tests ran.\n",
        edges.lag, edges.alpha, edges.tested, edges.tests
    )
    .unwrap();
    for (name, list) in [("graduated", &edges.graduated), ("retired", &edges.retired)] {
        writeln!(w, "### {name} ({} edges)\n", list.len()).unwrap();
        if list.is_empty() {
            writeln!(w, "none\n").unwrap();
            continue;
        }
        for e in list {
            let arrow = if e.bidirectional { "<->" } else { "->" };
            writeln!(w, "- {} {arrow} {}", e.from, e.to).unwrap();
        }
        writeln!(w).unwrap();
    }

    writeln!(w, "## Statement classifier\n").unwrap();
    writeln!(
        w,
        "{} classifier; {} annotated sentences, {} train threads, {} test threads.\n",
        eval.classifier, eval.annotated_sentences, eval.train_threads, eval.test_threads
    )
    .unwrap();
    match &eval.report {
        Some(r) => writeln!(
            w,
            "| precision | recall | F1 | accuracy | tp | fp | fn | tn |\n|---:|---:|---:|---:|---:|---:|---:|---:|\n| {} | {} | {} | {} | {} | {} | {} | {} |",
            num(Some(r.precision)),
            num(Some(r.recall)),
            num(Some(r.f1)),
            num(Some(r.accuracy)),
            r.tp,
            r.fp,
            r.fn_,
            r.tn
        )
        .unwrap(),
        None => writeln!(w, "No held-out annotated sentences.").unwrap(),
    }

    writeln!(
        w,
        "\n## Topics\n\nK = {} chosen by mean UMass coherence ({} documents, vocabulary {}).\n",
        topics.k, topics.documents, topics.vocabulary
    )
    .unwrap();
    writeln!(w, "| K | coherence |\n|---:|---:|").unwrap();
    for (k, c) in &topics.coherence {
        writeln!(w, "| {k} | {} |", num(Some(*c))).unwrap();
    }
    writeln!(w).unwrap();
    for t in &topics.topics {
        let words: Vec<&str> = t.top_words.iter().take(10).map(|(s, _)| s.as_str()).collect();
        match &t.label {
            Some(l) => writeln!(w, "- topic {} ({l}): {}", t.topic_id, words.join(", ")).unwrap(),
            None => writeln!(w, "- topic {}: {}", t.topic_id, words.join(", ")).unwrap(),
        }
    }
    o
}

pub fn cmd_report(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let started = now();
    let dir = analyze_dir(cfg);
    let inputs = [
        "panel_summary.json",
        "group_tests.csv",
        "granger_edges.json",
        "classifier_eval.json",
        "topics.json",
    ]
    .map(|f| dir.join(f));
    let out = report_path(cfg);
    stage("report", || {
        let text = render(
            &read_json(&inputs[0])?,
            &read_group_tests(&inputs[1])?,
            &read_json(&inputs[2])?,
            &read_json(&inputs[3])?,
            &read_json(&inputs[4])?,
        );
        let tmp = out.with_extension("md.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, &out)?;
        Ok(())
    })?;
    let inputs = digest_tree(&cfg.output_dir, &inputs)?;
    record_stage(cfg, "report", started, inputs, std::slice::from_ref(&out), BTreeMap::new())?;
    Ok(out)
}
