use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use bansap::fog::{generate_instance, FogInstance};
use bansap_harness::config::Instance;
use bansap_harness::{
    emit_outputs, run_single, sweep, Axis, ExperimentConfig, ProblemConfig, ResultTable, RunFailure,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bansap",
    version,
    about = "Run bandit saddle-point experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm over all seeds.
    Run {
        config: PathBuf,
        /// Also write each seed's fog instance as JSON under `instances/`.
        #[arg(long)]
        snapshots: bool,
    },
    /// Repeat the experiment for each value of one axis.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: Axis,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
    /// Run the configured algorithms on a saved fog instance.
    Replay {
        snapshot: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Exploration seed; defaults to the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run { config, snapshots } => {
            let cfg = ExperimentConfig::load(&config)?;
            let table = bansap_harness::run_experiment(&cfg)?;
            if snapshots {
                write_snapshots(&cfg)?;
            }
            finish(&[table], &cfg.output_dir)
        }
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let tables = sweep(&cfg, axis, &values)?;
            finish(&tables, &cfg.output_dir)
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            for (algo, hp) in cfg.validate()? {
                println!(
                    "{algo}: alpha={} mu={} delta={} gamma={} M={} start={:?}",
                    hp.alpha, hp.mu, hp.delta, hp.gamma, hp.m, hp.start
                );
            }
            println!(
                "{} runs x {} slots, seeds from {}",
                cfg.runs, cfg.horizon, cfg.base_seed
            );
            Ok(())
        }
        Command::Replay {
            snapshot,
            config,
            seed,
        } => replay(&snapshot, &config, seed),
    }
}

/// Writes whatever succeeded, then reports failures through the exit code.
fn finish(tables: &[ResultTable], dir: &Path) -> anyhow::Result<()> {
    let written = emit_outputs(tables, dir)?;
    for path in written.raw.iter().chain([&written.summary, &written.plot]) {
        log::info!("wrote {}", path.display());
    }
    let failures: Vec<&RunFailure> = tables.iter().flat_map(|t| &t.failures).collect();
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("failed: {} seed {}: {}", f.algorithm, f.seed, f.message);
        }
        let total: usize = tables.iter().map(|t| t.runs.len() + t.failures.len()).sum();
        bail!("{} of {total} runs failed", failures.len());
    }
    Ok(())
}

fn write_snapshots(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let ProblemConfig::Fog(fog) = &cfg.problem else {
        bail!("snapshots are only written for the fog problem");
    };
    let dir = cfg.output_dir.join("instances");
    std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
    for seed in cfg.seeds() {
        let inst = generate_instance(fog, cfg.horizon, seed)?;
        let path = dir.join(format!("seed_{seed}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&inst)?)
            .with_context(|| path.display().to_string())?;
    }
    Ok(())
}

fn replay(snapshot: &Path, config: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(snapshot).with_context(|| snapshot.display().to_string())?;
    let inst: FogInstance =
        serde_json::from_str(&text).with_context(|| snapshot.display().to_string())?;
    inst.validate()?;
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.horizon = inst.horizon();
    let seed = seed.unwrap_or(cfg.base_seed);
    let set = inst.feasible_set();
    let mut table = ResultTable {
        nodes: inst.network.nodes(),
        ..ResultTable::default()
    };
    let instance = Instance::Fog(inst);
    for spec in &cfg.algorithms {
        let algo = spec.algorithm()?;
        let hp = spec.hyper_params(cfg.horizon, &set, cfg.start)?;
        match run_single(&instance, &set, algo, &hp, seed, None) {
            Ok(r) => table.runs.push(r),
            Err(e) => table.failures.push(RunFailure {
                algorithm: algo.label(),
                seed,
                message: e.to_string(),
            }),
        }
    }
    finish(&[table], &cfg.output_dir.join("replay"))
}
