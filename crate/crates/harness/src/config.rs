//! Experiment configuration, read from TOML.
//!
//! See `configs/` at the repository root for complete, commented examples.

use std::path::{Path, PathBuf};

use bansap::fog::{generate_instance, FogConfig, FogInstance};
use bansap::solver::{schedule, FeedbackMode, ScheduleConstants, StartPoint};
use bansap::{Algorithm, BoxSet, HyperParams, SamplingScheme};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::synthetic::{SyntheticConfig, SyntheticInstance};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "BANSAP_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: usize,
    /// Monte-Carlo runs; run `i` uses seed `base_seed + i`.
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Also compute per-slot optima and dynamic regret. Costly on long horizons.
    #[serde(default)]
    pub regret: bool,
    /// Worker threads; defaults to the number of cores.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Default starting point of the learning iterate.
    #[serde(default)]
    pub start: StartPoint,
    pub problem: ProblemConfig,
    pub algorithms: Vec<AlgorithmSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemConfig {
    Fog(FogConfig),
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Bansap,
    Mosp,
    CloudOnly,
    FogOnly,
}

/// One algorithm and its stepsizes.
///
/// Stepsizes come either from explicit `alpha`, `mu`, `delta` or from a
/// horizon-dependent `schedule` with constants `c_alpha`, `c_mu`, `c_delta`.
/// `gamma` defaults to `delta / r`, `r` the inner radius of the box.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub kind: Option<AlgorithmKind>,
    pub m: Option<usize>,
    pub scheme: Option<SamplingScheme>,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub schedule: Option<FeedbackMode>,
    pub c_alpha: Option<f64>,
    pub c_mu: Option<f64>,
    pub c_delta: Option<f64>,
    pub rho: Option<f64>,
    pub start: Option<StartPoint>,
}

impl AlgorithmSpec {
    pub fn algorithm(&self) -> Result<Algorithm> {
        let kind = self
            .kind
            .ok_or_else(|| HarnessError::config("algorithm entry without `kind`"))?;
        let only_bandit = |field: &str, set: bool| {
            if set {
                Err(HarnessError::config(format!(
                    "`{field}` only applies to kind = \"bansap\""
                )))
            } else {
                Ok(())
            }
        };
        if kind != AlgorithmKind::Bansap {
            only_bandit("m", self.m.is_some())?;
            only_bandit("scheme", self.scheme.is_some())?;
            only_bandit("delta", self.delta.is_some())?;
            only_bandit("c_delta", self.c_delta.is_some())?;
        }
        Ok(match kind {
            AlgorithmKind::Bansap => Algorithm::BanSaP {
                m: self
                    .m
                    .ok_or_else(|| HarnessError::config("bansap entry needs `m`"))?,
                scheme: self.scheme.unwrap_or(SamplingScheme::UniformSphere),
            },
            AlgorithmKind::Mosp => Algorithm::Mosp,
            AlgorithmKind::CloudOnly => Algorithm::CloudOnly,
            AlgorithmKind::FogOnly => Algorithm::FogOnly,
        })
    }

    /// Effective hyperparameters on `set` over `horizon` slots.
    pub fn hyper_params(
        &self,
        horizon: usize,
        set: &BoxSet,
        default_start: StartPoint,
    ) -> Result<HyperParams> {
        let algo = self.algorithm()?;
        let bandit = matches!(algo, Algorithm::BanSaP { .. });
        let start = self.start.unwrap_or(default_start);
        let label = algo.label();

        let mut hp = match (algo, self.schedule) {
            (Algorithm::CloudOnly | Algorithm::FogOnly, _) => {
                if self.alpha.is_some() || self.mu.is_some() || self.schedule.is_some() {
                    return Err(HarnessError::config(format!("{label} takes no stepsizes")));
                }
                HyperParams {
                    alpha: 1.0,
                    mu: 1.0,
                    delta: 0.0,
                    gamma: 0.0,
                    m: 1,
                    scheme: SamplingScheme::UniformSphere,
                    horizon,
                    rho: None,
                    start,
                }
            }
            (_, Some(mode)) => {
                if self.alpha.is_some() || self.mu.is_some() || self.delta.is_some() {
                    return Err(HarnessError::config(format!(
                        "{label}: give either `schedule` or explicit alpha/mu/delta, not both"
                    )));
                }
                let constants = ScheduleConstants {
                    c_alpha: self.c_alpha.unwrap_or(1.0),
                    c_mu: self.c_mu,
                    c_delta: self.c_delta.unwrap_or(1.0),
                };
                let mut hp = schedule(horizon, mode, self.rho, set, constants)?;
                hp.start = start;
                hp
            }
            (_, None) => {
                if self.c_alpha.is_some() || self.c_mu.is_some() || self.c_delta.is_some() {
                    return Err(HarnessError::config(format!(
                        "{label}: schedule constants without `schedule`"
                    )));
                }
                let need = |name: &str, v: Option<f64>| {
                    v.ok_or_else(|| {
                        HarnessError::config(format!("{label} needs `{name}` or a `schedule`"))
                    })
                };
                let delta = if bandit {
                    need("delta", self.delta)?
                } else {
                    0.0
                };
                HyperParams {
                    alpha: need("alpha", self.alpha)?,
                    mu: need("mu", self.mu)?,
                    delta,
                    gamma: delta / set.inner_radius(),
                    m: 1,
                    scheme: SamplingScheme::UniformSphere,
                    horizon,
                    rho: self.rho,
                    start,
                }
            }
        };
        if let Some(gamma) = self.gamma {
            log::warn!(
                "{label}: gamma set by hand to {gamma} (default would be {})",
                hp.gamma
            );
            hp.gamma = gamma;
        }
        let hp = hp.for_algorithm(algo);
        hp.validate(set, bandit)?;
        Ok(hp)
    }
}

/// A generated problem instance.
#[derive(Debug, Clone)]
pub enum Instance {
    Fog(FogInstance),
    Synthetic(SyntheticInstance),
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemConfig::Fog(c) => Ok(c.validate()?),
            ProblemConfig::Synthetic(c) => c.validate(),
        }
    }

    pub fn feasible_set(&self) -> Result<BoxSet> {
        match self {
            ProblemConfig::Fog(c) => Ok(c.network()?.feasible_set()),
            ProblemConfig::Synthetic(c) => c.feasible_set(),
        }
    }

    pub fn instance(&self, horizon: usize, seed: u64) -> Result<Instance> {
        Ok(match self {
            ProblemConfig::Fog(c) => Instance::Fog(generate_instance(c, horizon, seed)?),
            ProblemConfig::Synthetic(c) => Instance::Synthetic(c.instance(seed)?),
        })
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads `path`, applying the output-directory environment override.
    /// Call [`ExperimentConfig::validate`] before use.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let mut cfg = Self::from_toml(&text).map_err(|source| HarnessError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.runs as u64).map(|i| self.base_seed.wrapping_add(i))
    }

    /// Checks everything that can be checked without running, and returns the
    /// resolved algorithms with their hyperparameters.
    pub fn validate(&self) -> Result<Vec<(Algorithm, HyperParams)>> {
        if self.horizon == 0 {
            return Err(HarnessError::config("horizon must be >= 1"));
        }
        if self.runs == 0 {
            return Err(HarnessError::config("runs must be >= 1"));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::config("algorithm list is empty"));
        }
        if self.threads == Some(0) {
            return Err(HarnessError::config("threads must be >= 1"));
        }
        self.problem.validate()?;
        let set = self.problem.feasible_set()?;
        let mut resolved: Vec<(Algorithm, HyperParams)> = Vec::with_capacity(self.algorithms.len());
        for spec in &self.algorithms {
            let algo = spec.algorithm()?;
            if resolved.iter().any(|(a, _)| *a == algo) {
                return Err(HarnessError::config(format!("{algo} listed twice")));
            }
            if matches!(algo, Algorithm::CloudOnly | Algorithm::FogOnly)
                && !matches!(self.problem, ProblemConfig::Fog(_))
            {
                return Err(HarnessError::config(format!(
                    "{algo} needs the fog problem"
                )));
            }
            let hp = spec.hyper_params(self.horizon, &set, self.start)?;
            resolved.push((algo, hp));
        }
        Ok(resolved)
    }
}
