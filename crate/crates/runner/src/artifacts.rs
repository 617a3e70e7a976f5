//! Run directories, checkpoints and stored populations.

use std::fs;
use std::path::{Path, PathBuf};

use critevo::criticality::{SensorDataset, SensorProvenance};
use critevo::evolution::{EsCheckpoint, EsEvolution, Evolution, GaCheckpoint, GaEvolution};
use critevo::ising::IsingGenome;
use critevo::rng::Seed;
use critevo::world::{AgentTrace, SensorLog};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{IoContext, Result, RunnerError};
use crate::table::{parse, read_rows, Table};

pub const CHECKPOINT_SCHEMA: &str = "critevo-checkpoint/v1";
pub const POPULATION_SCHEMA: &str = "critevo-population/v1";

pub const CONFIG_FILE: &str = "config.toml";
pub const SEED_FILE: &str = "seed.toml";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_POPULATION: &str = "population_final.json";
pub const SENSORS_GEN0: &str = "sensors_gen0.csv";
pub const SENSORS_FINAL: &str = "sensors_final.csv";

pub const SENSOR_COLUMNS: [&str; 6] = ["step", "agent_id", "theta", "dist", "v", "E"];
pub const TRACE_COLUMNS: [&str; 4] = ["step", "agent_id", "energy", "speed"];

/// How to treat an output directory that already exists.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Continue from the stored state; the stored config must match.
    pub resume: bool,
    /// Delete an existing directory instead of refusing to run.
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRecord {
    pub root: u64,
    pub replicate: usize,
    /// Derived seeds span all of `u64`; TOML integers stop at `i64::MAX`.
    #[serde(with = "decimal")]
    pub run: u64,
}

mod decimal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl SeedRecord {
    pub fn new(root: u64, replicate: usize) -> Self {
        SeedRecord { root, replicate, run: Seed::new(root).child(replicate as u64).0 }
    }

    pub fn seed(&self) -> Seed {
        Seed(self.run)
    }
}

/// Creates `dir` and writes the config and seed copies, or checks them
/// against the stored ones when resuming. Returns whether earlier state
/// was found.
pub fn prepare_run_dir(dir: &Path, config: &ExperimentConfig, seed: SeedRecord, options: RunOptions) -> Result<bool> {
    let config_path = dir.join(CONFIG_FILE);
    let seed_path = dir.join(SEED_FILE);
    if options.resume && config_path.exists() {
        let stored = ExperimentConfig::load(&config_path)?;
        if &stored != config {
            return Err(RunnerError::ResumeMismatch(format!("{} differs from the requested config", config_path.display())));
        }
        let text = fs::read_to_string(&seed_path).at(&seed_path)?;
        let stored: SeedRecord =
            toml::from_str(&text).map_err(|e| RunnerError::artifact(&seed_path, e.to_string()))?;
        if stored != seed {
            return Err(RunnerError::ResumeMismatch(format!("{} records a different seed", seed_path.display())));
        }
        return Ok(true);
    }
    let occupied = dir.exists() && fs::read_dir(dir).at(dir)?.next().is_some();
    if occupied {
        if !options.force {
            return Err(RunnerError::Config(format!(
                "{} already exists; pass --resume to continue it or --force to replace it",
                dir.display()
            )));
        }
        fs::remove_dir_all(dir).at(dir)?;
    }
    fs::create_dir_all(dir).at(dir)?;
    fs::write(&config_path, config.to_toml()?).at(&config_path)?;
    let seed_text = toml::to_string(&seed).map_err(|e| RunnerError::Config(e.to_string()))?;
    fs::write(&seed_path, seed_text).at(&seed_path)?;
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionState {
    Ga(GaCheckpoint),
    Es(EsCheckpoint),
}

/// Everything needed to continue an evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub config: ExperimentConfig,
    pub seed: SeedRecord,
    pub state: EvolutionState,
}

impl Checkpoint {
    pub fn capture(config: &ExperimentConfig, seed: SeedRecord, evolution: &Evolution) -> Self {
        let state = match evolution {
            Evolution::Ga(e) => EvolutionState::Ga(e.checkpoint()),
            Evolution::Es(e) => EvolutionState::Es(e.checkpoint()),
        };
        Checkpoint { schema: CHECKPOINT_SCHEMA.into(), config: config.clone(), seed, state }
    }

    pub fn generation(&self) -> usize {
        match &self.state {
            EvolutionState::Ga(c) => c.generation,
            EvolutionState::Es(c) => c.generation,
        }
    }

    pub fn restore(&self) -> Result<Evolution> {
        let cfg = &self.config;
        let seed = self.seed.seed();
        Ok(match (&self.state, cfg.experiment) {
            (EvolutionState::Ga(c), ExperimentKind::EvolveGa) => {
                Evolution::Ga(GaEvolution::resume(c.clone(), cfg.ga.clone(), cfg.world.clone(), seed)?)
            }
            (EvolutionState::Es(c), ExperimentKind::EvolveEs) => {
                Evolution::Es(EsEvolution::resume(c.clone(), cfg.es()?.clone(), cfg.world.clone(), seed)?)
            }
            _ => return Err(RunnerError::ResumeMismatch("checkpoint state does not match its experiment kind".into())),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json_atomically(path, &serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        let cp: Checkpoint = serde_json::from_str(&text).map_err(|e| RunnerError::artifact(path, e.to_string()))?;
        if cp.schema != CHECKPOINT_SCHEMA {
            return Err(RunnerError::artifact(path, format!("unsupported checkpoint schema {:?}", cp.schema)));
        }
        Ok(cp)
    }
}

pub fn checkpoint_path(dir: &Path, generation: usize) -> PathBuf {
    dir.join(CHECKPOINT_DIR).join(format!("gen_{generation:06}.json"))
}

/// The checkpoint with the highest generation not above `max_generation`.
pub fn latest_checkpoint(dir: &Path, max_generation: usize) -> Result<Option<PathBuf>> {
    let cp_dir = dir.join(CHECKPOINT_DIR);
    if !cp_dir.exists() {
        return Ok(None);
    }
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in fs::read_dir(&cp_dir).at(&cp_dir)? {
        let path = entry.at(&cp_dir)?.path();
        let generation = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.strip_prefix("gen_"))
            .and_then(|s| s.parse::<usize>().ok());
        if let Some(g) = generation.filter(|g| *g <= max_generation) {
            if best.as_ref().is_none_or(|(b, _)| g > *b) {
                best = Some((g, path));
            }
        }
    }
    Ok(best.map(|(_, p)| p))
}

/// Writes to a temporary sibling first so a crash never leaves a torn file.
fn write_json_atomically(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).at(parent)?;
    }
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).at(&tmp)?;
    fs::rename(&tmp, path).at(path)
}

/// An evaluated population: the genomes of one generation and the fitness
/// each earned in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRecord {
    pub schema: String,
    pub generation: usize,
    pub genomes: Vec<IsingGenome>,
    pub fitness: Vec<f64>,
}

impl PopulationRecord {
    pub fn new(generation: usize, genomes: Vec<IsingGenome>, fitness: Vec<f64>) -> Self {
        PopulationRecord { schema: POPULATION_SCHEMA.into(), generation, genomes, fitness }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json_atomically(path, &serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        let rec: PopulationRecord =
            serde_json::from_str(&text).map_err(|e| RunnerError::artifact(path, e.to_string()))?;
        if rec.schema != POPULATION_SCHEMA {
            return Err(RunnerError::artifact(path, format!("unsupported population schema {:?}", rec.schema)));
        }
        if rec.genomes.len() != rec.fitness.len() {
            return Err(RunnerError::artifact(path, "genome and fitness counts differ"));
        }
        Ok(rec)
    }
}

/// A finished evolution run as seen by the analyses.
#[derive(Debug, Clone)]
pub struct CompletedRun {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub seed: SeedRecord,
    pub population: PopulationRecord,
}

impl CompletedRun {
    pub fn open(dir: &Path) -> Result<Self> {
        let config = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
        let seed_path = dir.join(SEED_FILE);
        let text = fs::read_to_string(&seed_path).at(&seed_path)?;
        let seed = toml::from_str(&text).map_err(|e| RunnerError::artifact(&seed_path, e.to_string()))?;
        let population = PopulationRecord::load(&dir.join(FINAL_POPULATION))?;
        Ok(CompletedRun { dir: dir.to_path_buf(), config, seed, population })
    }
}

pub fn write_sensor_log(path: &Path, log: &SensorLog) -> Result<()> {
    let mut table = Table::create(path, &SENSOR_COLUMNS)?;
    for (agent, readings) in log.per_agent.iter().enumerate() {
        for (step, r) in readings.iter().enumerate() {
            table.row(&[&step, &agent, &r.theta_food, &r.d_food, &r.v_norm, &r.e_norm])?;
        }
    }
    table.finish()
}

/// Energy and speed after each step; steps count from 1.
pub fn write_traces(path: &Path, traces: &[AgentTrace]) -> Result<()> {
    let mut table = Table::create(path, &TRACE_COLUMNS)?;
    for (agent, trace) in traces.iter().enumerate() {
        for (step, (e, v)) in trace.energy.iter().zip(&trace.speed).enumerate() {
            table.row(&[&(step + 1), &agent, e, v])?;
        }
    }
    table.finish()
}

/// Per-agent sensor datasets, indexed by agent id.
pub fn read_sensor_log(path: &Path, provenance: SensorProvenance) -> Result<Vec<SensorDataset>> {
    let mut per_agent: Vec<Vec<f64>> = Vec::new();
    for row in read_rows(path, &SENSOR_COLUMNS)? {
        let agent: usize = parse(path, &row, 1)?;
        if per_agent.len() <= agent {
            per_agent.resize_with(agent + 1, Vec::new);
        }
        for col in 2..6 {
            per_agent[agent].push(parse(path, &row, col)?);
        }
    }
    per_agent
        .into_iter()
        .map(|v| SensorDataset::new(4, v, provenance).map_err(|e| RunnerError::artifact(path, e.to_string())))
        .collect()
}

/// All agents' readings in one dataset.
pub fn read_pooled_sensors(path: &Path, provenance: SensorProvenance) -> Result<SensorDataset> {
    let mut values = Vec::new();
    for row in read_rows(path, &SENSOR_COLUMNS)? {
        for col in 2..6 {
            values.push(parse::<f64>(path, &row, col)?);
        }
    }
    SensorDataset::new(4, values, provenance).map_err(|e| RunnerError::artifact(path, e.to_string()))
}
