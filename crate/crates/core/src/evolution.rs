//! Generation loops that evolve foraging controllers with the GA or the ES.
//!
//! Every generation draws its randomness from seeds derived from the run
//! seed and the generation index, so a run restored from a checkpoint
//! continues exactly as the uninterrupted run would have.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::es::{run_es_generation, sample_population, EsConfig, EsState, ForagingObjective, GenomeCodec};
use crate::ga::{next_generation, GaConfig, IsingVariation};
use crate::ising::{GenomeInit, IsingGenome, Layout};
use crate::lineage::LineageTag;
use crate::rng::{streams, Seed};
use crate::world::{run_lifetime, LifetimeOptions, LifetimeOutcome, WorldConfig};

/// Everything observed while evaluating one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub generation: usize,
    pub genomes: Vec<IsingGenome>,
    pub fitness: Vec<f64>,
    pub tags: Vec<LineageTag>,
    pub lifetime: LifetimeOutcome,
}

fn random_population(layout: Layout, beta: f64, init: &GenomeInit, n: usize, seed: Seed) -> Vec<IsingGenome> {
    let mut rng = seed.child(streams::INIT).rng();
    (0..n).map(|_| IsingGenome::random(layout, beta, init, &mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaCheckpoint {
    pub generation: usize,
    pub population: Vec<IsingGenome>,
    pub tags: Vec<LineageTag>,
}

#[derive(Debug, Clone)]
pub struct GaEvolution {
    pub config: GaConfig,
    pub world: WorldConfig,
    pub seed: Seed,
    population: Vec<IsingGenome>,
    tags: Vec<LineageTag>,
    generation: usize,
}

impl GaEvolution {
    pub fn new(population: Vec<IsingGenome>, config: GaConfig, world: WorldConfig, seed: Seed) -> Result<Self> {
        let tags = vec![LineageTag::Init; population.len()];
        Self::resume(GaCheckpoint { generation: 0, population, tags }, config, world, seed)
    }

    /// A population of random genomes sharing `beta`.
    pub fn random(
        layout: Layout,
        beta: f64,
        init: &GenomeInit,
        config: GaConfig,
        world: WorldConfig,
        seed: Seed,
    ) -> Result<Self> {
        let pop = random_population(layout, beta, init, config.population_size(), seed);
        Self::new(pop, config, world, seed)
    }

    pub fn resume(cp: GaCheckpoint, config: GaConfig, world: WorldConfig, seed: Seed) -> Result<Self> {
        config.validate()?;
        world.validate()?;
        let n = config.population_size();
        if n != world.n_agents {
            return Err(Error::InvalidConfig(format!(
                "GA population {n} differs from world n_agents {}",
                world.n_agents
            )));
        }
        if cp.population.len() != n || cp.tags.len() != n {
            return Err(Error::PopulationSize { expected: n, found: cp.population.len() });
        }
        Ok(GaEvolution { config, world, seed, population: cp.population, tags: cp.tags, generation: cp.generation })
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[IsingGenome] {
        &self.population
    }

    pub fn checkpoint(&self) -> GaCheckpoint {
        GaCheckpoint { generation: self.generation, population: self.population.clone(), tags: self.tags.clone() }
    }

    /// The genomes the next [`step`](Self::step) evaluates and the seed of
    /// their shared lifetime.
    pub fn pending(&self) -> (Vec<IsingGenome>, Seed) {
        (self.population.clone(), self.seed.child(streams::WORLD).child(self.generation as u64))
    }

    /// Evaluates the current generation, then breeds the next one.
    pub fn step(&mut self, options: LifetimeOptions) -> Result<GenerationReport> {
        let g = self.generation as u64;
        let lifetime = run_lifetime(&self.population, &self.world, self.pending().1, options)?;
        let mut rng = self.seed.child(streams::EVOLVE).child(g).rng();
        let (next, tags) =
            next_generation(&self.population, &lifetime.fitness, &IsingVariation(&self.config), &self.config, &mut rng)?;
        let report = GenerationReport {
            generation: self.generation,
            genomes: std::mem::replace(&mut self.population, next),
            fitness: lifetime.fitness.clone(),
            tags: std::mem::replace(&mut self.tags, tags),
            lifetime,
        };
        self.generation += 1;
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsCheckpoint {
    pub generation: usize,
    pub template: IsingGenome,
    pub state: EsState,
}

/// The ES searches the admissible weights of a fixed-topology template,
/// plus `beta`.
#[derive(Debug, Clone)]
pub struct EsEvolution {
    pub config: EsConfig,
    pub world: WorldConfig,
    pub seed: Seed,
    codec: GenomeCodec,
    state: EsState,
    generation: usize,
}

impl EsEvolution {
    /// The search starts from one random genome.
    pub fn random(
        layout: Layout,
        beta: f64,
        init: &GenomeInit,
        config: EsConfig,
        world: WorldConfig,
        seed: Seed,
    ) -> Result<Self> {
        let template = random_population(layout, beta, init, 1, seed).remove(0);
        let codec = GenomeCodec::new(template.clone());
        let start = codec.encode(&template);
        let state = EsState::new(start.params, start.beta);
        Self::resume(EsCheckpoint { generation: 0, template, state }, config, world, seed)
    }

    pub fn resume(cp: EsCheckpoint, config: EsConfig, world: WorldConfig, seed: Seed) -> Result<Self> {
        config.validate()?;
        world.validate()?;
        if config.population != world.n_agents {
            return Err(Error::InvalidConfig(format!(
                "ES population {} differs from world n_agents {}",
                config.population, world.n_agents
            )));
        }
        let codec = GenomeCodec::new(cp.template);
        if cp.state.mean.len() != codec.dim() {
            return Err(Error::DimensionMismatch { expected: codec.dim(), found: cp.state.mean.len() });
        }
        Ok(EsEvolution { config, world, seed, codec, state: cp.state, generation: cp.generation })
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn state(&self) -> &EsState {
        &self.state
    }

    /// The genome at the current search mean.
    pub fn mean_genome(&self) -> IsingGenome {
        self.codec.decode(&crate::es::Candidate { params: self.state.mean.clone(), beta: self.state.mean_beta })
    }

    pub fn checkpoint(&self) -> EsCheckpoint {
        EsCheckpoint { generation: self.generation, template: self.codec.template().clone(), state: self.state.clone() }
    }

    /// The candidates the next [`step`](Self::step) evaluates, decoded, and
    /// the seed of their shared lifetime.
    pub fn pending(&self) -> (Vec<IsingGenome>, Seed) {
        let mut rng = self.seed.child(streams::EVOLVE).child(self.generation as u64).rng();
        let batch = sample_population(&self.state, &self.config, &mut rng);
        let genomes = batch.candidates.iter().map(|c| self.codec.decode(c)).collect();
        (genomes, self.seed.child(streams::WORLD).child(self.generation as u64).child(streams::WORLD))
    }

    pub fn step(&mut self, options: LifetimeOptions) -> Result<GenerationReport> {
        let mut objective = ForagingObjective {
            codec: self.codec.clone(),
            world: self.world.clone(),
            seed: self.seed.child(streams::WORLD),
            options,
            last: None,
        };
        let mut rng = self.seed.child(streams::EVOLVE).child(self.generation as u64).rng();
        let step = run_es_generation(&mut objective, &self.state, &self.config, self.generation, &mut rng)?;
        let report = GenerationReport {
            generation: self.generation,
            genomes: step.candidates.iter().map(|c| self.codec.decode(c)).collect(),
            fitness: step.fitness,
            tags: step.tags,
            lifetime: objective.last.expect("objective ran"),
        };
        self.state = step.next;
        self.generation += 1;
        Ok(report)
    }
}

/// Either optimizer behind one interface.
#[derive(Debug, Clone)]
pub enum Evolution {
    Ga(GaEvolution),
    Es(EsEvolution),
}

impl Evolution {
    pub fn step(&mut self, options: LifetimeOptions) -> Result<GenerationReport> {
        match self {
            Evolution::Ga(e) => e.step(options),
            Evolution::Es(e) => e.step(options),
        }
    }

    pub fn generation(&self) -> usize {
        match self {
            Evolution::Ga(e) => e.generation(),
            Evolution::Es(e) => e.generation(),
        }
    }

    pub fn pending(&self) -> (Vec<IsingGenome>, Seed) {
        match self {
            Evolution::Ga(e) => e.pending(),
            Evolution::Es(e) => e.pending(),
        }
    }
}
