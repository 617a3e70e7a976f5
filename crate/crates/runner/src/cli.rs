//! Command-line interface.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::artifacts::RunOptions;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Result, RunnerError};
use crate::experiments::{replay, run_experiment};

/// Output root when neither `--out`, `CRITEVO_OUT` nor `output_dir` is set.
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(name = "critevo", version, about = "Evolve Ising-network foraging agents and measure their criticality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override the config's root seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output root; runs go to `<out>/<experiment>/<run_id>/`.
    #[arg(long, global = true, env = "CRITEVO_OUT")]
    pub out: Option<PathBuf>,

    /// Worker threads for running independent runs side by side.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Continue an interrupted run from its last checkpoint.
    #[arg(long, global = true)]
    pub resume: bool,

    /// Replace an existing run directory.
    #[arg(long, global = true, conflicts_with = "resume")]
    pub force: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evolve populations with the GA or the ES.
    Evolve,
    /// Heat-capacity curves and distance to criticality.
    Criticality,
    /// Finite-size scaling of random networks.
    Scaling,
    /// Energy growth over an extended lifespan.
    Generalize,
    /// Fitness under random weight perturbations.
    Perturb,
    /// GA versus ES on Rastrigin, Rosenbrock and Sphere.
    Benchmark,
    /// Evolution at several thermalization settings.
    Thermalize,
    /// Compare top-agent delta between simple- and hard-task runs.
    DeltaDist,
    /// Re-simulate the lifetime after a checkpoint with full logging.
    Replay {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Override the stored lifespan.
        #[arg(long)]
        lifespan: Option<usize>,
    },
}

impl Command {
    fn accepts(&self, kind: ExperimentKind) -> bool {
        use ExperimentKind as K;
        match self {
            Command::Evolve => matches!(kind, K::EvolveGa | K::EvolveEs),
            Command::Criticality => matches!(kind, K::CriticalityScan | K::SensorModes),
            Command::Scaling => kind == K::Scaling,
            Command::Generalize => kind == K::Generalize,
            Command::Perturb => kind == K::Perturb,
            Command::Benchmark => kind == K::Benchmark,
            Command::Thermalize => kind == K::ThermalizationSweep,
            Command::DeltaDist => kind == K::DeltaDistribution,
            Command::Replay { .. } => false,
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunnerError::Config(format!("--threads: {e}")))?;
    }
    if let Command::Replay { checkpoint, lifespan } = &cli.command {
        let out = match &cli.out {
            Some(o) => o.clone(),
            None => {
                let stem = checkpoint.file_stem().and_then(|s| s.to_str()).unwrap_or("checkpoint");
                let run_dir = checkpoint.parent().and_then(|p| p.parent()).unwrap_or(checkpoint.as_path());
                run_dir.join(format!("replay_{stem}"))
            }
        };
        return replay(checkpoint, &out, *lifespan);
    }
    let path = cli.config.as_ref().ok_or_else(|| RunnerError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if !cli.command.accepts(cfg.experiment) {
        return Err(RunnerError::Config(format!(
            "{} holds a {} experiment, which this command does not run",
            path.display(),
            cfg.experiment
        )));
    }
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let dirs = run_experiment(&cfg, &out, RunOptions { resume: cli.resume, force: cli.force })?;
    for d in dirs {
        println!("{}", d.display());
    }
    Ok(())
}
