use std::path::{Path, PathBuf};

use rwe_core::eval::SplitSpec;
use rwe_core::ideology::{ConfidenceWeighting, FitConfig};
use rwe_core::recommenders::{Hyperparams, RecommenderRegistry, DEFAULT_BETA, DEFAULT_EPSILON, DEFAULT_NEIGHBORS};
use rwe_core::rwe::{DEFAULT_ITERATIONS, DEFAULT_WALK_LENGTH};
use serde::{Deserialize, Serialize};

use crate::dataset::Format;
use crate::error::{HarnessError, Result};

/// Which ideology entity plays the role of the recommended items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemKind {
    Elite,
    #[default]
    Content,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Unit,
    LogCount,
}

impl From<Weighting> for ConfidenceWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Unit => ConfidenceWeighting::Unit,
            Weighting::LogCount => ConfidenceWeighting::LogCount,
        }
    }
}

fn default_beta() -> Vec<f64> {
    vec![DEFAULT_BETA]
}
fn default_nu() -> Vec<f64> {
    vec![1.0]
}
fn default_neighbors() -> Vec<usize> {
    vec![DEFAULT_NEIGHBORS]
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_walk_length() -> usize {
    DEFAULT_WALK_LENGTH
}
fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}
fn default_one() -> usize {
    1
}
fn default_anchor_sign() -> i8 {
    1
}
fn default_outdir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_test_fraction() -> f64 {
    SplitSpec::default().test_fraction
}
fn default_min_interactions() -> usize {
    SplitSpec::default().min_interactions
}
fn default_repetitions() -> usize {
    SplitSpec::default().repetitions
}
fn default_fit_lambda() -> f64 {
    FitConfig::default().lambda
}
fn default_fit_mu() -> f64 {
    FitConfig::default().mu
}
fn default_fit_learning_rate() -> f64 {
    FitConfig::default().learning_rate
}
fn default_fit_max_epochs() -> usize {
    FitConfig::default().max_epochs
}

/// One experiment, loaded from a flat key/value TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub format: Format,
    pub algorithm: String,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    #[serde(default = "default_nu")]
    pub nu: Vec<f64>,
    #[serde(default = "default_neighbors")]
    pub neighbors: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_walk_length")]
    pub walk_length: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_one")]
    pub min_user_degree: usize,
    #[serde(default = "default_one")]
    pub min_item_degree: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_min_interactions")]
    pub min_interactions: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Position table written by `fit-ideology`.
    #[serde(default)]
    pub positions: Option<PathBuf>,
    /// User→elite and user→content edge files to fit positions from.
    #[serde(default)]
    pub elite_edges: Option<PathBuf>,
    #[serde(default)]
    pub content_edges: Option<PathBuf>,
    #[serde(default)]
    pub item_kind: ItemKind,
    /// Elite whose fitted position sets the sign of the scale.
    #[serde(default)]
    pub anchor_elite: Option<String>,
    /// Desired sign of the anchor's position.
    #[serde(default = "default_anchor_sign")]
    pub anchor_sign: i8,
    #[serde(default = "default_fit_lambda")]
    pub fit_lambda: f64,
    #[serde(default = "default_fit_mu")]
    pub fit_mu: f64,
    #[serde(default = "default_fit_learning_rate")]
    pub fit_learning_rate: f64,
    #[serde(default = "default_fit_max_epochs")]
    pub fit_max_epochs: usize,
    #[serde(default)]
    pub fit_weighting: Weighting,
    #[serde(default = "default_outdir")]
    pub outdir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Minimal config with defaults for everything else.
    pub fn new(dataset: impl Into<PathBuf>, format: Format, algorithm: &str) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            format,
            algorithm: algorithm.to_string(),
            beta: default_beta(),
            nu: default_nu(),
            neighbors: default_neighbors(),
            epsilon: default_epsilon(),
            walk_length: default_walk_length(),
            iterations: default_iterations(),
            min_user_degree: 1,
            min_item_degree: 1,
            test_fraction: default_test_fraction(),
            min_interactions: default_min_interactions(),
            repetitions: default_repetitions(),
            positions: None,
            elite_edges: None,
            content_edges: None,
            item_kind: ItemKind::default(),
            anchor_elite: None,
            anchor_sign: 1,
            fit_lambda: default_fit_lambda(),
            fit_mu: default_fit_mu(),
            fit_learning_rate: default_fit_learning_rate(),
            fit_max_epochs: default_fit_max_epochs(),
            fit_weighting: Weighting::Unit,
            outdir: default_outdir(),
            seed: 0,
        }
    }

    /// Parses TOML text; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        for p in [Some(&mut cfg.dataset), cfg.positions.as_mut(), cfg.elite_edges.as_mut(), cfg.content_edges.as_mut()]
            .into_iter()
            .flatten()
            .chain(std::iter::once(&mut cfg.outdir))
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn has_positions_source(&self) -> bool {
        self.positions.is_some() || self.elite_edges.is_some() || self.content_edges.is_some()
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            test_fraction: self.test_fraction,
            min_interactions: self.min_interactions,
            repetitions: self.repetitions,
            seed,
        }
    }

    pub fn fit_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            lambda: self.fit_lambda,
            mu: self.fit_mu,
            learning_rate: self.fit_learning_rate,
            max_epochs: self.fit_max_epochs,
            seed,
            ..FitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let registry = RecommenderRegistry::default();
        let factory = registry.get(&self.algorithm).map_err(|e| HarnessError::Config(e.to_string()))?;
        if factory.needs_positions() && !self.has_positions_source() {
            return Err(HarnessError::Config(format!(
                "{} needs positions: set `positions` or `elite_edges`/`content_edges`",
                self.algorithm
            )));
        }
        if self.positions.is_some() && (self.elite_edges.is_some() || self.content_edges.is_some()) {
            return Err(HarnessError::Config("give either `positions` or edge files to fit, not both".into()));
        }
        self.split_spec(0).validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.grid_points().is_empty() {
            return Err(HarnessError::Config(format!("empty hyperparameter grid for {}", self.algorithm)));
        }
        Ok(())
    }

    fn values_for(&self, key: &str) -> Vec<f64> {
        match key {
            "beta" => self.beta.clone(),
            "nu" => self.nu.clone(),
            "neighbors" => self.neighbors.iter().map(|&k| k as f64).collect(),
            "epsilon" => vec![self.epsilon],
            "walk_length" => vec![self.walk_length as f64],
            "iterations" => vec![self.iterations as f64],
            _ => Vec::new(),
        }
    }

    /// Cartesian product over the hyperparameters the algorithm reads, in
    /// the order the factory lists them.
    pub fn grid_points(&self) -> Vec<Hyperparams> {
        let registry = RecommenderRegistry::default();
        let Ok(factory) = registry.get(&self.algorithm) else {
            return Vec::new();
        };
        let mut points = vec![Hyperparams::new()];
        for &key in factory.params() {
            let values = self.values_for(key);
            points = points
                .iter()
                .flat_map(|p| values.iter().map(move |&v| p.clone().with(key, v)))
                .collect();
        }
        points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_file_with_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "dataset = \"ratings.dat\"\nformat = \"movielens-dat\"\nalgorithm = \"rwe-d\"\nbeta = [0.5, 0.7]\nnu = [0.7, 1.0]\nseed = 5\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(cfg.dataset, PathBuf::from("/data/ratings.dat"));
        assert_eq!(cfg.repetitions, 3);
        assert_eq!(cfg.seed, 5);
        let grid = cfg.grid_points();
        assert_eq!(grid.len(), 4);
        assert_eq!(grid[0].label(), "beta-0.5_iterations-10_nu-0.7_walk_length-3");
    }

    #[test]
    fn p3_grid_has_one_point() {
        let cfg = ExperimentConfig::new("x", Format::TsvEdges, "p3");
        assert_eq!(cfg.grid_points(), vec![Hyperparams::new()]);
    }

    #[test]
    fn invalid_configs() {
        let base = Path::new(".");
        let head = "dataset = \"d\"\nformat = \"tsv-edges\"\n";
        assert!(ExperimentConfig::from_toml(&format!("{head}algorithm = \"rwe-b\"\n"), base).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{head}algorithm = \"svd\"\n"), base).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{head}algorithm = \"rp3b\"\nbeta = []\n"), base).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{head}algorithm = \"p3\"\ncolour = 1\n"), base).is_err());
        assert!(ExperimentConfig::from_toml(&format!("{head}algorithm = \"p3\"\ntest_fraction = 1.5\n"), base).is_err());
        let ok = ExperimentConfig::from_toml(&format!("{head}algorithm = \"rwe-b\"\npositions = \"m.tsv\"\n"), base);
        assert!(ok.is_ok());
    }
}
