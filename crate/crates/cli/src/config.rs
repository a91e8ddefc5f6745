//! Run configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use stsgov_core::panel;
use stsgov_core::stats::NonStationaryPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Baseline,
    External { endpoint: String },
}

fn default_seed() -> u64 {
    42
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_projects_file() -> String {
    "projects.csv".into()
}
fn default_roster_file() -> Option<String> {
    Some("roster.csv".into())
}
fn default_gold_file() -> Option<String> {
    Some("gold.jsonl".into())
}
fn default_token_budget() -> usize {
    stsgov_core::is_extract::DEFAULT_TOKEN_BUDGET
}
fn default_test_fraction() -> f64 {
    0.125
}
fn default_trim() -> f64 {
    0.02
}
fn default_lag() -> usize {
    2
}
fn default_alpha() -> f64 {
    0.01
}
fn default_adf_alpha() -> f64 {
    0.05
}
fn default_policy() -> NonStationaryPolicy {
    NonStationaryPolicy::Exclude
}
fn default_st_vars() -> Vec<String> {
    stsgov_core::stats::DEFAULT_GRID_ST_VARS.iter().map(|s| s.to_string()).collect()
}
fn default_lda_grid() -> Vec<usize> {
    (2..=20).collect()
}
fn default_lda_restarts() -> usize {
    1
}
fn default_lda_iterations() -> usize {
    1000
}
fn default_beta() -> f64 {
    0.01
}
fn default_top_n() -> usize {
    10
}
fn default_horizon() -> i32 {
    stsgov_core::topics::DEFAULT_HORIZON_MONTHS
}
fn default_classifier() -> ClassifierConfig {
    ClassifierConfig::Baseline
}

/// Every key has a default; relative paths are taken from the directory of
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_root: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; all processors when absent.
    #[serde(default)]
    pub jobs: Option<usize>,

    #[serde(default = "default_projects_file")]
    pub projects_file: String,
    #[serde(default = "default_roster_file")]
    pub roster_file: Option<String>,
    #[serde(default)]
    pub aliases_file: Option<String>,
    #[serde(default)]
    pub bot_rules_file: Option<PathBuf>,
    #[serde(default)]
    pub source_extensions_file: Option<PathBuf>,

    #[serde(default = "default_classifier")]
    pub classifier: ClassifierConfig,
    #[serde(default = "default_gold_file")]
    pub gold_file: Option<String>,
    /// Extra all-positive training text, blocks separated by blank lines.
    #[serde(default)]
    pub policies_file: Option<PathBuf>,
    #[serde(default = "default_token_budget")]
    pub token_budget: usize,
    /// Share of annotated threads held out for evaluation.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,

    #[serde(default = "default_trim")]
    pub trim_fraction: f64,
    #[serde(default = "default_lag")]
    pub granger_lag: usize,
    #[serde(default = "default_alpha")]
    pub granger_alpha: f64,
    #[serde(default)]
    pub granger_small_sample: bool,
    #[serde(default = "default_policy")]
    pub nonstationary: NonStationaryPolicy,
    #[serde(default = "default_adf_alpha")]
    pub adf_alpha: f64,
    #[serde(default = "default_st_vars")]
    pub grid_st_vars: Vec<String>,

    #[serde(default = "default_lda_grid")]
    pub lda_grid: Vec<usize>,
    /// Fits per topic count in the coherence search.
    #[serde(default = "default_lda_restarts")]
    pub lda_restarts: usize,
    #[serde(default = "default_lda_iterations")]
    pub lda_iterations: usize,
    /// Document-topic prior; 50/K when absent.
    #[serde(default)]
    pub lda_alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub lda_beta: f64,
    #[serde(default = "default_top_n")]
    pub coherence_top_n: usize,
    #[serde(default = "default_horizon")]
    pub horizon_months: i32,
    /// Human-assigned names for topic ids, shown in reports.
    #[serde(default)]
    pub topic_labels: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(corpus_root: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        let mut c: RunConfig = toml::from_str("corpus_root = \".\"").expect("defaults parse");
        c.corpus_root = corpus_root.into();
        c.output_dir = output_dir.into();
        c
    }

    pub fn from_toml(text: &str, base: &Path) -> anyhow::Result<Self> {
        let mut c: RunConfig = toml::from_str(text)?;
        for p in [&mut c.corpus_root, &mut c.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        for p in [&mut c.bot_rules_file, &mut c.source_extensions_file, &mut c.policies_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        use anyhow::ensure;
        ensure!(self.token_budget > 0, "token_budget must be positive");
        ensure!(
            self.test_fraction > 0.0 && self.test_fraction < 1.0,
            "test_fraction must lie in (0, 1)"
        );
        ensure!(
            self.trim_fraction > 0.0 && self.trim_fraction < 0.5,
            "trim_fraction must lie in (0, 0.5)"
        );
        ensure!(self.granger_lag >= 1, "granger_lag must be at least 1");
        ensure!(
            self.granger_alpha > 0.0 && self.granger_alpha < 1.0,
            "granger_alpha must lie in (0, 1)"
        );
        ensure!(self.adf_alpha > 0.0 && self.adf_alpha < 1.0, "adf_alpha must lie in (0, 1)");
        ensure!(!self.lda_grid.is_empty(), "lda_grid is empty");
        ensure!(self.lda_grid.iter().all(|&k| k >= 2), "lda_grid values must be at least 2");
        ensure!(self.lda_restarts >= 1, "lda_restarts must be at least 1");
        ensure!(self.lda_iterations >= 1, "lda_iterations must be at least 1");
        ensure!(self.lda_alpha.is_none_or(|a| a > 0.0), "lda_alpha must be positive");
        ensure!(self.lda_beta > 0.0, "lda_beta must be positive");
        ensure!(self.coherence_top_n >= 2, "coherence_top_n must be at least 2");
        ensure!(self.horizon_months >= 1, "horizon_months must be at least 1");
        ensure!(self.jobs.is_none_or(|j| j >= 1), "jobs must be at least 1");
        let known: Vec<&str> = panel::ST_VARS.to_vec();
        for v in &self.grid_st_vars {
            ensure!(known.contains(&v.as_str()), "unknown socio-technical variable {v:?} in grid_st_vars");
        }
        Ok(())
    }

    /// Digest of everything that affects results. Output location and
    /// worker count are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.jobs = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn projects_path(&self) -> PathBuf {
        self.corpus_root.join(&self.projects_file)
    }

    pub fn roster_path(&self) -> Option<PathBuf> {
        self.roster_file.as_ref().map(|f| self.corpus_root.join(f)).filter(|p| p.exists())
    }

    pub fn gold_path(&self) -> Option<PathBuf> {
        self.gold_file.as_ref().map(|f| self.corpus_root.join(f)).filter(|p| p.exists())
    }

    pub fn aliases_path(&self) -> Option<PathBuf> {
        self.aliases_file.as_ref().map(|f| self.corpus_root.join(f))
    }
}
