//! Monte-Carlo fan-out over (algorithm, seed) pairs.

use bansap::metrics::{optima_series, ExactLoss, FitAccumulator, OptimumConfig};
use bansap::solver::{run_with, Problem};
use bansap::{
    Algorithm, BoxSet, ConstraintOracle, GradientOracle, HyperParams, LossOracle, SamplingScheme,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Instance, ProblemConfig};
use crate::error::{HarnessError, Result};

/// Per-slot series of one (algorithm, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: String,
    pub seed: u64,
    /// `(1/M) Σ_m f_t(x_{m,t})`.
    pub avg_cost: Vec<f64>,
    /// Fit after slot `t`.
    pub cum_fit: Vec<f64>,
    /// `||λ_t||`, before the slot's update.
    pub dual_norm: Vec<f64>,
    /// Cumulative dynamic regret at the horizon, when requested.
    pub regret: Option<f64>,
}

impl RunResult {
    pub fn time_average_cost(&self) -> f64 {
        if self.avg_cost.is_empty() {
            return 0.0;
        }
        self.avg_cost.iter().sum::<f64>() / self.avg_cost.len() as f64
    }

    pub fn fit(&self) -> f64 {
        self.cum_fit.last().copied().unwrap_or(0.0)
    }

    pub fn max_dual_norm(&self) -> f64 {
        self.dual_norm.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub algorithm: String,
    pub seed: u64,
    pub message: String,
}

/// Everything one experiment produced, in (algorithm, seed) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    /// Sweep value this table belongs to; empty outside sweeps.
    pub axis_value: String,
    /// Constraint count, used to report fit per node.
    pub nodes: usize,
    pub runs: Vec<RunResult>,
    pub failures: Vec<RunFailure>,
    /// Number of optima series solved; one per seed when regret is on.
    pub optima_computed: usize,
}

impl ResultTable {
    pub fn algorithms(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.algorithm.as_str()) {
                out.push(&r.algorithm);
            }
        }
        out
    }

    pub fn runs_of<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a RunResult> + 'a {
        self.runs.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn check_failures(&self) -> Result<()> {
        if self.failures.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::RunsFailed {
                failed: self.failures.len(),
                total: self.failures.len() + self.runs.len(),
            })
        }
    }
}

impl Instance {
    pub fn loss(&self) -> &dyn LossOracle {
        match self {
            Instance::Fog(i) => i,
            Instance::Synthetic(i) => i,
        }
    }

    pub fn exact(&self) -> &dyn ExactLoss {
        match self {
            Instance::Fog(i) => i,
            Instance::Synthetic(i) => i,
        }
    }

    pub fn constraints(&self) -> &dyn ConstraintOracle {
        match self {
            Instance::Fog(i) => i,
            Instance::Synthetic(i) => i,
        }
    }

    pub fn gradient(&self) -> &dyn GradientOracle {
        match self {
            Instance::Fog(i) => i,
            Instance::Synthetic(i) => i,
        }
    }

    pub fn problem<'a>(&'a self, set: &'a BoxSet) -> Problem<'a> {
        let p = Problem::new(set, self.loss(), self.constraints()).with_gradient(self.gradient());
        match self {
            Instance::Fog(i) => p.with_heuristics(i),
            Instance::Synthetic(_) => p,
        }
    }
}

/// Runs one algorithm on one instance and reduces its slots to series.
pub fn run_single(
    instance: &Instance,
    set: &BoxSet,
    algorithm: Algorithm,
    hp: &HyperParams,
    seed: u64,
    f_star: Option<&[f64]>,
) -> bansap::Result<RunResult> {
    let problem = instance.problem(set);
    let mut fit = FitAccumulator::new(instance.constraints().count());
    let mut out = RunResult {
        algorithm: algorithm.label(),
        seed,
        avg_cost: Vec::with_capacity(hp.horizon),
        cum_fit: Vec::with_capacity(hp.horizon),
        dual_norm: Vec::with_capacity(hp.horizon),
        regret: None,
    };
    run_with(&problem, algorithm, hp, seed, |rec| {
        out.avg_cost.push(rec.average_loss());
        out.cum_fit.push(fit.push(rec));
        out.dual_norm.push(rec.lambda_norm);
        Ok(())
    })?;
    out.regret = f_star.map(|fs| out.avg_cost.iter().sum::<f64>() - fs.iter().sum::<f64>());
    Ok(out)
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Builds one instance per seed, optionally the shared optima series, then
/// runs every (algorithm, seed) pair in parallel. Failed runs are recorded,
/// not fatal.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    let resolved = config.validate()?;
    let set = config.problem.feasible_set()?;
    let seeds: Vec<u64> = config.seeds().collect();
    let horizon = config.horizon;
    let started = std::time::Instant::now();

    with_pool(config.threads, || {
        let instances: Vec<std::result::Result<Instance, String>> = seeds
            .par_iter()
            .map(|&s| {
                config
                    .problem
                    .instance(horizon, s)
                    .map_err(|e| e.to_string())
            })
            .collect();

        let optima: Vec<Option<std::result::Result<Vec<f64>, String>>> = instances
            .par_iter()
            .map(|inst| {
                if !config.regret {
                    return None;
                }
                let inst = inst.as_ref().ok()?;
                Some(
                    optima_series(
                        inst.exact(),
                        inst.constraints(),
                        &set,
                        horizon,
                        &OptimumConfig::default(),
                    )
                    .map(|o| o.f_star)
                    .map_err(|e| e.to_string()),
                )
            })
            .collect();

        let pairs: Vec<(usize, usize)> = (0..resolved.len())
            .flat_map(|a| (0..seeds.len()).map(move |s| (a, s)))
            .collect();
        let outcomes: Vec<std::result::Result<RunResult, RunFailure>> = pairs
            .par_iter()
            .map(|&(a, s)| {
                let (algo, hp) = &resolved[a];
                let fail = |message: String| RunFailure {
                    algorithm: algo.label(),
                    seed: seeds[s],
                    message,
                };
                let inst = instances[s]
                    .as_ref()
                    .map_err(|e| fail(format!("instance: {e}")))?;
                let f_star = match &optima[s] {
                    Some(Ok(f)) => Some(f.as_slice()),
                    Some(Err(e)) => return Err(fail(format!("optima: {e}"))),
                    None => None,
                };
                run_single(inst, &set, *algo, hp, seeds[s], f_star).map_err(|e| fail(e.to_string()))
            })
            .collect();

        let mut table = ResultTable {
            nodes: instances
                .iter()
                .flatten()
                .next()
                .map_or(0, |i| i.constraints().count()),
            optima_computed: optima.iter().filter(|o| matches!(o, Some(Ok(_)))).count(),
            ..ResultTable::default()
        };
        for outcome in outcomes {
            match outcome {
                Ok(r) => table.runs.push(r),
                Err(f) => {
                    log::error!("{} seed {}: {}", f.algorithm, f.seed, f.message);
                    table.failures.push(f);
                }
            }
        }
        log::info!(
            "{} runs, {} failures in {:.1}s",
            table.runs.len(),
            table.failures.len(),
            started.elapsed().as_secs_f64()
        );
        table
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Queries per slot of every BanSaP entry.
    M,
    /// Sampling scheme of every BanSaP entry.
    Scheme,
    /// Number of fog nodes.
    N,
}

impl std::str::FromStr for Axis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "m" => Ok(Axis::M),
            "scheme" => Ok(Axis::Scheme),
            "N" | "n" => Ok(Axis::N),
            other => Err(HarnessError::config(format!(
                "unknown sweep axis '{other}' (M, scheme or N)"
            ))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::M => "M",
            Axis::Scheme => "scheme",
            Axis::N => "N",
        })
    }
}

/// Copy of `config` with `axis` set to `value`.
pub fn with_axis(config: &ExperimentConfig, axis: Axis, value: &str) -> Result<ExperimentConfig> {
    let mut cfg = config.clone();
    let bad = |what: &str| HarnessError::config(format!("bad {what} value '{value}'"));
    match axis {
        Axis::M => {
            let m: usize = value.parse().map_err(|_| bad("M"))?;
            if m == 0 {
                return Err(bad("M"));
            }
            for spec in cfg.algorithms.iter_mut().filter(|s| s.m.is_some()) {
                spec.m = Some(m);
            }
        }
        Axis::Scheme => {
            let scheme: SamplingScheme = value.parse()?;
            for spec in cfg.algorithms.iter_mut().filter(|s| s.m.is_some()) {
                spec.scheme = Some(scheme);
            }
        }
        Axis::N => {
            let n: usize = value.parse().map_err(|_| bad("N"))?;
            match &mut cfg.problem {
                ProblemConfig::Fog(f) => f.nodes = n,
                ProblemConfig::Synthetic(_) => {
                    return Err(HarnessError::config("axis N needs the fog problem"));
                }
            }
        }
    }
    dedup_algorithms(&mut cfg)?;
    Ok(cfg)
}

/// Collapsing M or scheme can make entries identical; keep the first.
fn dedup_algorithms(cfg: &mut ExperimentConfig) -> Result<()> {
    let mut seen = Vec::new();
    let mut kept = Vec::new();
    for spec in cfg.algorithms.drain(..) {
        let algo = spec.algorithm()?;
        if !seen.contains(&algo) {
            seen.push(algo);
            kept.push(spec);
        }
    }
    cfg.algorithms = kept;
    Ok(())
}

/// One [`run_experiment`] per axis value.
pub fn sweep(config: &ExperimentConfig, axis: Axis, values: &[String]) -> Result<Vec<ResultTable>> {
    if values.is_empty() {
        return Err(HarnessError::config("sweep needs at least one value"));
    }
    let configs = values
        .iter()
        .map(|v| with_axis(config, axis, v))
        .collect::<Result<Vec<_>>>()?;
    for c in &configs {
        c.validate()?;
    }
    configs
        .iter()
        .zip(values)
        .map(|(c, v)| {
            log::info!("sweep {axis} = {v}");
            let mut table = run_experiment(c)?;
            table.axis_value = v.clone();
            Ok(table)
        })
        .collect()
}
