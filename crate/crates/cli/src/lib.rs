//! Command-line pipeline: ingest mailing-list and commit archives, build
//! monthly socio-technical networks, detect institutional statements, and
//! run the time-series and topic analyses.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod report;

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::info;

use config::RunConfig;
use stsgov_core::synth::{write_synthetic_corpus, SynthCorpusConfig};

#[derive(Debug, Parser)]
#[command(name = "stsgov", version, about = "Socio-technical and governance analysis of project archives")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all processors).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse mbox archives and commit logs into normalized JSON lines.
    Ingest,
    /// Networks, statements, statistics, topics and plots.
    Analyze,
    /// Write report.md from the analyze outputs.
    Report,
    /// Convert `git log --name-only --date=iso-strict` output to commits.jsonl.
    ConvertGitlog {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train and score the statement classifier on the annotated threads.
    EvalClassifier,
    /// Write a synthetic corpus plus a matching stsgov.toml.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        projects: usize,
        #[arg(long, default_value_t = 18)]
        months: u32,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let path = cli.config.as_ref().context("--config is required for this command")?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_pool(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // fails only if a pool already exists, which is fine in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::ConvertGitlog { input, output } => {
            let log = fs::read_to_string(input).with_context(|| input.display().to_string())?;
            let (jsonl, n) = stsgov_core::ingest::convert_gitlog(&log);
            fs::write(output, &jsonl).with_context(|| output.display().to_string())?;
            info!("wrote {n} commits to {}", output.display());
            Ok(())
        }
        Command::Simulate { out, projects, months } => {
            let cfg = SynthCorpusConfig {
                projects: *projects,
                months: *months,
                ..Default::default()
            };
            let summary = write_synthetic_corpus(out, &cfg, cli.seed.unwrap_or(42))
                .with_context(|| out.display().to_string())?;
            fs::write(
                out.join("stsgov.toml"),
                "corpus_root = \".\"\noutput_dir = \"out\"\nlda_grid = [2, 3, 4, 5, 6]\n",
            )?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
        _ => {
            let cfg = load_config(&cli)?;
            init_pool(cfg.jobs);
            match cli.command {
                Command::Ingest => {
                    let r = pipeline::cmd_ingest(&cfg)?;
                    println!("{}", serde_json::to_string_pretty(&r.total)?);
                }
                Command::Analyze => {
                    let s = pipeline::cmd_analyze(&cfg)?;
                    println!("{}", serde_json::to_string_pretty(&s)?);
                }
                Command::Report => {
                    println!("{}", report::cmd_report(&cfg)?.display());
                }
                Command::EvalClassifier => {
                    let mut emails: Vec<_> = pipeline::load_ingested(&cfg)?
                        .into_iter()
                        .flat_map(|p| p.emails)
                        .collect();
                    let eval = pipeline::stage("eval-classifier", || pipeline::detect_statements(&cfg, &mut emails))?;
                    println!("{}", serde_json::to_string_pretty(&eval)?);
                }
                Command::ConvertGitlog { .. } | Command::Simulate { .. } => unreachable!(),
            }
            Ok(())
        }
    }
}
