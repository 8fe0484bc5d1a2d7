//! Experiment configuration files (TOML).
//!
//! ```toml
//! name = "nn1"
//! architecture = "2-1-1"
//! fractions = [0.05]
//! seeds = [0, 1, 2]
//!
//! [problem]
//! kind = "teacher"
//! preset = "nn1"
//! n = 5000
//! seed = 7
//!
//! [[algorithms]]
//! kind = "alas"
//! policy = "practical"
//!
//! [[algorithms]]
//! kind = "sgd"
//! learning_rates = [1.0, 0.1]
//!
//! [budget]
//! iterations = 2000
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use alas_core::driver::{Acceptance, RunConfig, Sampling, Stopping};
use alas_core::linesearch::{DecreaseCondition, LineSearchConfig};
use alas_core::objectives::{SamplingMode, WeightScale};
use alas_core::step::Policy;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub problem: ProblemSource,
    /// Student network, e.g. `"22-4-1"`. Ignored for builtin problems.
    #[serde(default)]
    pub architecture: Option<String>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub fractions: Vec<f64>,
    #[serde(default = "default_mode")]
    pub sampling: SamplingMode,
    pub budget: Budget,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub solver: SolverSettings,
    /// Trailing fraction of each run used for the median loss.
    #[serde(default = "default_window")]
    pub summary_window: f64,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_mode() -> SamplingMode {
    SamplingMode::EpochPartition
}

fn default_output() -> PathBuf {
    PathBuf::from("alas-output")
}

fn default_window() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    /// Sparse text file, or a binary cache written by `gen-data`.
    Dataset {
        path: PathBuf,
        #[serde(default)]
        dim: Option<usize>,
        /// Keep only the first rows.
        #[serde(default)]
        limit: Option<usize>,
    },
    Teacher {
        /// `"nn1"` or `"nn2"`; ignored when `layers` is given.
        #[serde(default)]
        preset: Option<String>,
        #[serde(default)]
        layers: Option<Vec<usize>>,
        n: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default = "default_scale")]
        scale: WeightScale,
    },
    /// `quadratic`, `saddle` or `cubic`.
    Builtin {
        name: String,
        #[serde(default)]
        seed: u64,
    },
}

fn default_spread() -> f64 {
    3.0
}

fn default_scale() -> WeightScale {
    WeightScale::StdDev
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Alas { policy: Policy },
    Sgd { learning_rates: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub iterations: u64,
    #[serde(default)]
    pub wall_clock_secs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub eps: f64,
    pub theta: f64,
    pub eta: f64,
    pub j_max: u32,
    /// `J` of the consecutive-stationarity rule; absent disables it.
    pub stop_consecutive: Option<u32>,
    pub acceptance: Acceptance,
    pub full_metrics_every: u64,
    pub divergence_threshold: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            theta: 0.9,
            eta: 0.01,
            j_max: 50,
            stop_consecutive: None,
            acceptance: Acceptance::Plain,
            full_metrics_every: 1,
            divergence_threshold: 1e20,
        }
    }
}

/// One entry of the algorithm list after expanding learning-rate grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Alas(Policy),
    Sgd(f64),
}

impl Algorithm {
    /// Policy whose decrease condition and defaults the run uses.
    pub fn policy(self) -> Policy {
        match self {
            Algorithm::Alas(p) => p,
            Algorithm::Sgd(_) => Policy::Practical,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Alas(p) => write!(f, "alas-{p}"),
            Algorithm::Sgd(lr) => write!(f, "sgd-lr{lr}"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if self.fractions.is_empty() {
            return bad("at least one sample fraction is required".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return bad(format!("sample fraction {f} is outside (0,1]"));
        }
        for a in &self.algorithms {
            if let AlgorithmSpec::Sgd { learning_rates } = a {
                if learning_rates.is_empty() {
                    return bad("sgd needs at least one learning rate".into());
                }
                if let Some(lr) = learning_rates.iter().find(|lr| !(**lr > 0.0)) {
                    return bad(format!("learning rate {lr} must be positive"));
                }
            }
        }
        if self.budget.iterations == 0 {
            return bad("iteration budget must be positive".into());
        }
        if !(self.summary_window > 0.0 && self.summary_window <= 1.0) {
            return bad(format!("summary window {} is outside (0,1]", self.summary_window));
        }
        if !matches!(self.problem, ProblemSource::Builtin { .. }) && self.architecture.is_none() {
            return bad("an architecture is required for dataset and teacher problems".into());
        }
        Ok(())
    }

    /// Algorithm list with learning-rate grids expanded, in file order.
    pub fn expanded_algorithms(&self) -> Vec<Algorithm> {
        self.algorithms
            .iter()
            .flat_map(|a| match a {
                AlgorithmSpec::Alas { policy } => vec![Algorithm::Alas(*policy)],
                AlgorithmSpec::Sgd { learning_rates } => learning_rates.iter().map(|&lr| Algorithm::Sgd(lr)).collect(),
            })
            .collect()
    }

    /// Driver configuration for one run of the cross product.
    pub fn run_config(&self, algorithm: Algorithm, fraction: f64, seed: u64) -> RunConfig {
        let s = &self.solver;
        let condition = match algorithm.policy() {
            Policy::Theoretical => DecreaseCondition::Cubic,
            Policy::Practical => DecreaseCondition::Quadratic,
        };
        RunConfig {
            policy: algorithm.policy(),
            eps: s.eps,
            line_search: LineSearchConfig {
                theta: s.theta,
                eta: s.eta,
                condition,
                j_max: s.j_max,
            },
            sampling: Sampling {
                mode: self.sampling,
                fraction,
            },
            acceptance: s.acceptance,
            stopping: Stopping {
                consecutive: s.stop_consecutive,
                max_iterations: self.budget.iterations,
                wall_clock_secs: self.budget.wall_clock_secs,
            },
            seed,
            full_metrics_every: s.full_metrics_every,
            divergence_threshold: s.divergence_threshold,
        }
    }
}
