//! Experiment configuration files.
//!
//! A config is a TOML document naming the experiment kind plus the sections
//! that kind reads. Missing sections take their defaults; unknown keys are
//! rejected. [`ExperimentConfig::resolve`] fills kind-dependent defaults so
//! the copy written next to the outputs states every value that was used.

use std::fmt;
use std::path::{Path, PathBuf};

use critevo::benchmarks::{BenchmarkConfig, Function};
use critevo::criticality::{default_grid, AnnealingSchedule, ScalingConfig, WeightNormalization, DEFAULT_ROW_RMS};
use critevo::es::EsConfig;
use critevo::ga::GaConfig;
use critevo::ising::{GenomeInit, Layout};
use critevo::world::{Task, WorldConfig};
use serde::{Deserialize, Serialize};

use crate::error::{IoContext, Result, RunnerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EvolveGa,
    EvolveEs,
    CriticalityScan,
    Scaling,
    SensorModes,
    Generalize,
    Perturb,
    Benchmark,
    ThermalizationSweep,
    DeltaDistribution,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::EvolveGa => "evolve_ga",
            ExperimentKind::EvolveEs => "evolve_es",
            ExperimentKind::CriticalityScan => "criticality_scan",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::SensorModes => "sensor_modes",
            ExperimentKind::Generalize => "generalize",
            ExperimentKind::Perturb => "perturb",
            ExperimentKind::Benchmark => "benchmark",
            ExperimentKind::ThermalizationSweep => "thermalization_sweep",
            ExperimentKind::DeltaDistribution => "delta_distribution",
        }
    }

    pub fn is_evolution(self) -> bool {
        matches!(self, ExperimentKind::EvolveGa | ExperimentKind::EvolveEs)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenomeSection {
    pub hidden: usize,
    pub beta_init: f64,
    pub init: GenomeInit,
}

impl Default for GenomeSection {
    fn default() -> Self {
        GenomeSection { hidden: 4, beta_init: 1.0, init: GenomeInit::default() }
    }
}

impl GenomeSection {
    pub fn layout(&self) -> Layout {
        Layout::with_hidden(self.hidden)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    /// Required by the evolution kinds and the thermalization sweep.
    pub generations: Option<usize>,
    /// Log `delta` every this many generations (and at the first and last);
    /// 0 disables it.
    pub delta_every: usize,
    /// How many of the fittest agents get a `delta`; 0 means all.
    pub delta_top_k: usize,
    /// Write per-step energy and speed of the final generation.
    pub record_traces: bool,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        EvolutionSection { generations: None, delta_every: 0, delta_top_k: 0, record_traces: true }
    }
}

/// Sensor treatment for a heat-capacity curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    Thermalized,
    Generation0,
    Final,
    Uniform,
}

impl ModeChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeChoice::Thermalized => "thermalized",
            ModeChoice::Generation0 => "generation0",
            ModeChoice::Final => "final",
            ModeChoice::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalitySection {
    /// Evolution run directory whose final evaluated population is scanned.
    /// Without it, `n_genomes` fresh random genomes are scanned.
    pub run: Option<PathBuf>,
    pub n_genomes: usize,
    pub modes: Option<Vec<ModeChoice>>,
    pub grid: Vec<f64>,
    /// Sensor vectors per genome in `uniform` mode.
    pub uniform_rows: usize,
    pub schedule: AnnealingSchedule,
}

impl Default for CriticalitySection {
    fn default() -> Self {
        CriticalitySection {
            run: None,
            n_genomes: 50,
            modes: None,
            grid: default_grid(),
            uniform_rows: 100,
            schedule: AnnealingSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub sizes: Vec<usize>,
    pub ensemble_size: usize,
    pub grid: Vec<f64>,
    pub sensor_rows: usize,
    pub schedule: AnnealingSchedule,
    pub normalization: WeightNormalization,
}

impl Default for ScalingSection {
    fn default() -> Self {
        ScalingSection {
            sizes: vec![12, 25, 100],
            ensemble_size: 20,
            grid: default_grid(),
            sensor_rows: 100,
            schedule: AnnealingSchedule::default(),
            normalization: WeightNormalization::RowRms { scale: DEFAULT_ROW_RMS },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralizeSection {
    /// Evolution run directories; each contributes its final population.
    pub runs: Vec<PathBuf>,
    pub t_train: usize,
    pub t_extend: usize,
}

impl Default for GeneralizeSection {
    fn default() -> Self {
        GeneralizeSection { runs: Vec::new(), t_train: 2000, t_extend: 50000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbSection {
    pub runs: Vec<PathBuf>,
    pub grid: Vec<f64>,
    pub repeats: usize,
    /// Subtracted from the mean fitness before the log-linear fit.
    pub fit_baseline: f64,
}

impl Default for PerturbSection {
    fn default() -> Self {
        PerturbSection {
            runs: Vec::new(),
            grid: critevo::analysis::default_perturbation_grid(),
            repeats: 5,
            fit_baseline: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub functions: Vec<Function>,
    pub dim: usize,
    pub n_runs: usize,
    /// Required for the benchmark kind.
    pub generations: Option<usize>,
    pub ga_mutation_sigma: f64,
    pub init_sigma: f64,
    /// Drop `[es].bounds`; the benchmark domains are unbounded.
    pub es_unbounded: bool,
    /// Loss level for the generations-to-threshold summary.
    pub threshold: f64,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        BenchmarkSection {
            functions: Function::ALL.to_vec(),
            dim: 50,
            n_runs: 25,
            generations: None,
            ga_mutation_sigma: 1.0,
            init_sigma: 1.0,
            es_unbounded: true,
            threshold: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalizationSection {
    pub values: Vec<usize>,
}

impl Default for ThermalizationSection {
    fn default() -> Self {
        ThermalizationSection { values: vec![1, 5, 10, 20, 40] }
    }
}

/// Which sensor treatment the per-run `delta` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSensors {
    Final,
    Thermalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaDistributionSection {
    pub simple: Vec<PathBuf>,
    pub hard: Vec<PathBuf>,
    pub top_k: usize,
    pub sensors: DeltaSensors,
}

impl Default for DeltaDistributionSection {
    fn default() -> Self {
        DeltaDistributionSection { simple: Vec::new(), hard: Vec::new(), top_k: 30, sensors: DeltaSensors::Final }
    }
}

fn default_replicates() -> usize {
    1
}
fn default_checkpoint_interval() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Run identifier; defaults to the experiment kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_checkpoint_interval")]
    pub checkpoint_interval: usize,
    #[serde(default)]
    pub genome: GenomeSection,
    #[serde(default)]
    pub world: WorldConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub es: Option<EsConfig>,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub criticality: CriticalitySection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub generalize: GeneralizeSection,
    #[serde(default)]
    pub perturb: PerturbSection,
    #[serde(default)]
    pub benchmark: BenchmarkSection,
    #[serde(default)]
    pub thermalization: ThermalizationSection,
    #[serde(default)]
    pub delta_distribution: DeltaDistributionSection,
}

fn config_error(msg: impl Into<String>) -> RunnerError {
    RunnerError::Config(msg.into())
}

impl ExperimentConfig {
    /// A config of `kind` with every section at its default.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment: kind,
            name: None,
            seed: 0,
            n_replicates: 1,
            output_dir: None,
            checkpoint_interval: default_checkpoint_interval(),
            genome: GenomeSection::default(),
            world: WorldConfig::default(),
            ga: GaConfig::default(),
            es: None,
            evolution: EvolutionSection::default(),
            criticality: CriticalitySection::default(),
            scaling: ScalingSection::default(),
            generalize: GeneralizeSection::default(),
            perturb: PerturbSection::default(),
            benchmark: BenchmarkSection::default(),
            thermalization: ThermalizationSection::default(),
            delta_distribution: DeltaDistributionSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        Self::from_toml(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error(format!("cannot serialize config: {e}")))
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.experiment.as_str())
    }

    pub fn generations(&self) -> Result<usize> {
        self.evolution.generations.ok_or_else(|| config_error("evolution.generations is required"))
    }

    pub fn es(&self) -> Result<&EsConfig> {
        self.es.as_ref().ok_or_else(|| config_error("an [es] section with alpha and sigma is required"))
    }

    /// Fills kind-dependent defaults so the stored copy is explicit.
    pub fn resolve(mut self) -> Self {
        if self.criticality.modes.is_none() {
            let modes = match self.experiment {
                ExperimentKind::SensorModes => vec![ModeChoice::Thermalized, ModeChoice::Generation0, ModeChoice::Final],
                _ => vec![ModeChoice::Generation0],
            };
            self.criticality.modes = Some(modes);
        }
        if self.name.is_none() {
            self.name = Some(self.experiment.as_str().to_string());
        }
        self
    }

    pub fn modes(&self) -> &[ModeChoice] {
        self.criticality.modes.as_deref().unwrap_or(&[ModeChoice::Generation0])
    }

    pub fn scaling_config(&self) -> ScalingConfig {
        ScalingConfig {
            grid: self.scaling.grid.clone(),
            schedule: self.scaling.schedule.clone(),
            sensor_rows: self.scaling.sensor_rows,
            normalization: self.scaling.normalization,
            init: self.genome.init,
        }
    }

    pub fn benchmark_config(&self) -> Result<BenchmarkConfig> {
        let b = &self.benchmark;
        let generations = b.generations.ok_or_else(|| config_error("benchmark.generations is required"))?;
        let mut es = self.es()?.clone();
        if b.es_unbounded {
            es.bounds = None;
        }
        Ok(BenchmarkConfig {
            dim: b.dim,
            n_runs: b.n_runs,
            generations,
            ga: self.ga.clone(),
            ga_mutation_sigma: b.ga_mutation_sigma,
            es,
            init_sigma: b.init_sigma,
        })
    }

    /// The evolve config that one thermalization setting runs.
    pub fn thermalization_run(&self, steps: usize) -> ExperimentConfig {
        let mut cfg = self.clone();
        cfg.experiment = ExperimentKind::EvolveGa;
        cfg.n_replicates = 1;
        cfg.world.thermalization_steps = steps;
        cfg.name = Some(format!("therm_{steps:02}"));
        cfg
    }

    /// Rejects anything the selected experiment cannot run with. Called
    /// before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(config_error("seed must fit in a TOML integer (at most 2^63 - 1)"));
        }
        if self.n_replicates == 0 {
            return Err(config_error("n_replicates must be at least 1"));
        }
        if self.checkpoint_interval == 0 {
            return Err(config_error("checkpoint_interval must be at least 1"));
        }
        let name = self.name();
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(config_error(format!("name {name:?} is not a valid directory name")));
        }
        if !(self.genome.beta_init > 0.0 && self.genome.beta_init.is_finite()) {
            return Err(config_error("genome.beta_init must be positive"));
        }
        let init = &self.genome.init;
        if !(init.weight_range >= 0.0) || !(0.0..=1.0).contains(&init.edge_density) {
            return Err(config_error("genome.init needs weight_range >= 0 and edge_density in [0, 1]"));
        }
        self.world.validate()?;
        match self.experiment {
            ExperimentKind::EvolveGa | ExperimentKind::ThermalizationSweep => {
                if self.generations()? == 0 {
                    return Err(config_error("evolution.generations must be at least 1"));
                }
                self.ga.validate()?;
                if self.ga.population_size() != self.world.n_agents {
                    return Err(config_error(format!(
                        "GA population {} differs from world.n_agents {}",
                        self.ga.population_size(),
                        self.world.n_agents
                    )));
                }
                if self.experiment == ExperimentKind::ThermalizationSweep {
                    let v = &self.thermalization.values;
                    if v.is_empty() {
                        return Err(config_error("thermalization.values is empty"));
                    }
                    if v.contains(&0) {
                        return Err(config_error("thermalization steps must be at least 1"));
                    }
                }
                self.validate_delta_logging()?;
            }
            ExperimentKind::EvolveEs => {
                if self.generations()? == 0 {
                    return Err(config_error("evolution.generations must be at least 1"));
                }
                let es = self.es()?;
                es.validate()?;
                if es.population != self.world.n_agents {
                    return Err(config_error(format!(
                        "ES population {} differs from world.n_agents {}",
                        es.population, self.world.n_agents
                    )));
                }
                self.validate_delta_logging()?;
            }
            ExperimentKind::CriticalityScan | ExperimentKind::SensorModes => {
                let c = &self.criticality;
                validate_grid(&c.grid)?;
                c.schedule.validate()?;
                let modes = self.modes();
                if modes.is_empty() {
                    return Err(config_error("criticality.modes is empty"));
                }
                if c.run.is_none() {
                    if c.n_genomes == 0 {
                        return Err(config_error("criticality.n_genomes must be at least 1"));
                    }
                    if modes.contains(&ModeChoice::Final) {
                        return Err(config_error("the final sensor mode needs criticality.run"));
                    }
                }
                if modes.contains(&ModeChoice::Uniform) && c.uniform_rows == 0 {
                    return Err(config_error("criticality.uniform_rows must be at least 1"));
                }
            }
            ExperimentKind::Scaling => {
                let s = &self.scaling;
                if s.sizes.is_empty() || s.sizes.iter().any(|&n| n < 3) {
                    return Err(config_error("scaling.sizes must be non-empty and each at least 3"));
                }
                if s.ensemble_size == 0 || s.sensor_rows == 0 {
                    return Err(config_error("scaling.ensemble_size and sensor_rows must be positive"));
                }
                validate_grid(&s.grid)?;
                s.schedule.validate()?;
            }
            ExperimentKind::Generalize => {
                let g = &self.generalize;
                if g.runs.is_empty() {
                    return Err(config_error("generalize.runs is empty"));
                }
                if g.t_train == 0 || g.t_extend == 0 {
                    return Err(config_error("generalize lifespans must be positive"));
                }
            }
            ExperimentKind::Perturb => {
                let p = &self.perturb;
                if p.runs.is_empty() {
                    return Err(config_error("perturb.runs is empty"));
                }
                if p.repeats == 0 || p.grid.is_empty() || p.grid.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
                    return Err(config_error("perturb needs repeats >= 1 and a non-empty, non-negative grid"));
                }
            }
            ExperimentKind::Benchmark => {
                if self.benchmark.functions.is_empty() {
                    return Err(config_error("benchmark.functions is empty"));
                }
                if !(self.benchmark.threshold > 0.0) {
                    return Err(config_error("benchmark.threshold must be positive"));
                }
                self.benchmark_config()?.validate()?;
            }
            ExperimentKind::DeltaDistribution => {
                let d = &self.delta_distribution;
                if d.simple.is_empty() || d.hard.is_empty() {
                    return Err(config_error("delta_distribution needs simple and hard runs"));
                }
                if d.top_k == 0 {
                    return Err(config_error("delta_distribution.top_k must be at least 1"));
                }
                validate_grid(&self.criticality.grid)?;
                self.criticality.schedule.validate()?;
            }
        }
        Ok(())
    }

    fn validate_delta_logging(&self) -> Result<()> {
        if self.evolution.delta_every > 0 {
            validate_grid(&self.criticality.grid)?;
            self.criticality.schedule.validate()?;
        }
        Ok(())
    }

    /// Task of the world, for labelling.
    pub fn task(&self) -> Task {
        self.world.task
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(config_error("c_beta grid must be non-empty and positive"));
    }
    Ok(())
}
