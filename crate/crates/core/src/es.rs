//! Natural evolution strategy with a fixed isotropic search distribution,
//! rank-normalized fitness, a gradient taken relative to the best individual,
//! a carried-over elite set and sparse perturbations.
//!
//! Update of the mean:
//! `J_{t+1} = J* + alpha / (n sigma) * sum_i F_i (J_i - J*)`
//! where `J*` is the best sampled individual and `F` the rank-normalized
//! fitness. `beta` follows the same rule with `sigma_beta = 0.1 sigma`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingGenome, WEIGHT_BOUND};
use crate::lineage::LineageTag;
use crate::rng::{streams, Seed};
use crate::stats::{argsort_desc, average_ranks, mean, variance};
use crate::world::{run_lifetime, LifetimeOptions, LifetimeOutcome, WorldConfig};

fn default_sigma_beta_ratio() -> f64 {
    0.1
}
fn default_population() -> usize {
    50
}
fn default_n_elite() -> usize {
    6
}
fn default_sparsity() -> f64 {
    0.5
}
fn default_bounds() -> Option<[f64; 2]> {
    Some([-WEIGHT_BOUND, WEIGHT_BOUND])
}
fn default_beta_floor() -> f64 {
    1e-3
}

/// `alpha` and `sigma` have no defaults on purpose: every recipe states them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsConfig {
    pub alpha: f64,
    pub sigma: f64,
    #[serde(default = "default_sigma_beta_ratio")]
    pub sigma_beta_ratio: f64,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_n_elite")]
    pub n_elite: usize,
    /// Probability that an entry of a perturbation vector is zeroed.
    #[serde(default = "default_sparsity")]
    pub sparsity: f64,
    /// Box applied to the mean and to samples; `None` leaves them unbounded.
    #[serde(default = "default_bounds")]
    pub bounds: Option<[f64; 2]>,
    #[serde(default = "default_beta_floor")]
    pub beta_floor: f64,
}

impl EsConfig {
    pub fn new(alpha: f64, sigma: f64) -> Self {
        EsConfig {
            alpha,
            sigma,
            sigma_beta_ratio: default_sigma_beta_ratio(),
            population: default_population(),
            n_elite: default_n_elite(),
            sparsity: default_sparsity(),
            bounds: default_bounds(),
            beta_floor: default_beta_floor(),
        }
    }

    pub fn sigma_beta(&self) -> f64 {
        self.sigma_beta_ratio * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("es: {m}")));
        if !(self.alpha >= 0.0 && self.sigma >= 0.0) {
            return bad("alpha and sigma must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return bad("sparsity must lie in [0, 1]");
        }
        if self.n_elite >= self.population || self.population < 2 {
            return bad("need n_elite < population and population >= 2");
        }
        if !(self.beta_floor > 0.0) {
            return bad("beta_floor must be positive");
        }
        Ok(())
    }

    fn clamp(&self, x: f64) -> f64 {
        match self.bounds {
            Some([lo, hi]) => x.clamp(lo, hi),
            None => x,
        }
    }
}

/// One point in parameter space, with an optional inverse temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: Vec<f64>,
    pub beta: Option<f64>,
}

/// The search distribution's mean plus the elites carried to the next batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsState {
    pub mean: Vec<f64>,
    pub mean_beta: Option<f64>,
    pub elites: Vec<Candidate>,
}

impl EsState {
    pub fn new(mean: Vec<f64>, mean_beta: Option<f64>) -> Self {
        EsState { mean, mean_beta, elites: Vec::new() }
    }
}

/// A sampled batch. `epsilons[i]` is the unscaled perturbation of candidate
/// `i` relative to the current mean (for elites: `(elite - mean) / sigma`).
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub candidates: Vec<Candidate>,
    pub epsilons: Vec<Vec<f64>>,
    pub tags: Vec<LineageTag>,
}

/// Stored elites first, then fresh samples `mean + sigma * eps` with each
/// entry of `eps` zeroed with probability `sparsity`.
pub fn sample_population<R: Rng + ?Sized>(state: &EsState, config: &EsConfig, rng: &mut R) -> Batch {
    let dim = state.mean.len();
    let n = config.population;
    let mut candidates = Vec::with_capacity(n);
    let mut epsilons = Vec::with_capacity(n);
    let mut tags = Vec::with_capacity(n);

    for elite in state.elites.iter().take(config.n_elite.min(n)) {
        let eps = elite
            .params
            .iter()
            .zip(&state.mean)
            .map(|(e, m)| if config.sigma > 0.0 { (e - m) / config.sigma } else { 0.0 })
            .collect();
        candidates.push(elite.clone());
        epsilons.push(eps);
        tags.push(LineageTag::Elite);
    }
    let sigma_beta = config.sigma_beta();
    while candidates.len() < n {
        let eps: Vec<f64> = (0..dim)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                if rng.random::<f64>() < config.sparsity {
                    0.0
                } else {
                    z
                }
            })
            .collect();
        let params =
            state.mean.iter().zip(&eps).map(|(m, e)| config.clamp(m + config.sigma * e)).collect();
        let beta = state.mean_beta.map(|b| {
            let z: f64 = rng.sample(StandardNormal);
            (b + sigma_beta * z).max(config.beta_floor)
        });
        candidates.push(Candidate { params, beta });
        epsilons.push(eps);
        tags.push(LineageTag::Sampled);
    }
    Batch { candidates, epsilons, tags }
}

/// Ranks (ties averaged), then standardizes to mean 0 and population
/// standard deviation 1. All-equal input yields zeros.
pub fn rank_fitness(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.len() < 2 {
        return Err(Error::InsufficientData("rank_fitness needs at least two values".into()));
    }
    let ranks = average_ranks(raw);
    let m = mean(&ranks);
    let sd = variance(&ranks).sqrt();
    if sd == 0.0 {
        return Ok(vec![0.0; raw.len()]);
    }
    Ok(ranks.iter().map(|r| (r - m) / sd).collect())
}

/// Moves the mean to the best candidate plus the rank-weighted step, and
/// keeps the top `n_elite` candidates by raw fitness.
pub fn update_mean(state: &EsState, batch: &Batch, raw: &[f64], config: &EsConfig) -> Result<EsState> {
    let n = batch.candidates.len();
    if raw.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: raw.len() });
    }
    let ranked_f = rank_fitness(raw)?;
    let order = argsort_desc(raw);
    let best = &batch.candidates[order[0]];

    let step = if config.sigma > 0.0 { config.alpha / (n as f64 * config.sigma) } else { 0.0 };
    let mean = (0..state.mean.len())
        .map(|k| {
            let star = best.params[k];
            let grad: f64 = batch
                .candidates
                .iter()
                .zip(&ranked_f)
                .map(|(c, f)| f * (c.params[k] - star))
                .sum();
            config.clamp(star + step * grad)
        })
        .collect();

    let mean_beta = match (state.mean_beta, best.beta) {
        (Some(_), Some(star)) => {
            let sb = config.sigma_beta();
            let step_b = if sb > 0.0 { config.alpha / (n as f64 * sb) } else { 0.0 };
            let grad: f64 = batch
                .candidates
                .iter()
                .zip(&ranked_f)
                .map(|(c, f)| f * (c.beta.unwrap_or(star) - star))
                .sum();
            Some((star + step_b * grad).max(config.beta_floor))
        }
        (b, _) => b,
    };

    let elites = order.iter().take(config.n_elite).map(|&i| batch.candidates[i].clone()).collect();
    Ok(EsState { mean, mean_beta, elites })
}

/// Something that assigns a fitness (to maximize) to every candidate of a
/// batch.
pub trait Objective {
    fn evaluate(&mut self, candidates: &[Candidate], generation: usize) -> Result<Vec<f64>>;
}

/// Wraps a deterministic per-candidate function.
pub struct FnObjective<F>(pub F);

impl<F: FnMut(&Candidate) -> f64> Objective for FnObjective<F> {
    fn evaluate(&mut self, candidates: &[Candidate], _generation: usize) -> Result<Vec<f64>> {
        Ok(candidates.iter().map(&mut self.0).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsStep {
    pub next: EsState,
    pub candidates: Vec<Candidate>,
    pub tags: Vec<LineageTag>,
    pub fitness: Vec<f64>,
}

/// Sample, evaluate, rank and update.
pub fn run_es_generation<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &mut O,
    state: &EsState,
    config: &EsConfig,
    generation: usize,
    rng: &mut R,
) -> Result<EsStep> {
    let batch = sample_population(state, config, rng);
    let fitness = objective.evaluate(&batch.candidates, generation)?;
    let next = update_mean(state, &batch, &fitness, config)?;
    Ok(EsStep { next, candidates: batch.candidates, tags: batch.tags, fitness })
}

/// Maps a template genome's admissible weights to and from a flat parameter
/// vector. The adjacency of the template is kept fixed.
#[derive(Debug, Clone)]
pub struct GenomeCodec {
    template: IsingGenome,
    admissible: Vec<usize>,
}

impl GenomeCodec {
    pub fn new(template: IsingGenome) -> Self {
        let admissible = template.mask().admissible();
        GenomeCodec { template, admissible }
    }

    pub fn dim(&self) -> usize {
        self.admissible.len()
    }

    pub fn template(&self) -> &IsingGenome {
        &self.template
    }

    pub fn encode(&self, genome: &IsingGenome) -> Candidate {
        Candidate {
            params: self.admissible.iter().map(|&k| genome.weights()[k]).collect(),
            beta: Some(genome.beta()),
        }
    }

    pub fn decode(&self, c: &Candidate) -> IsingGenome {
        let mut g = self.template.clone();
        let n = g.n();
        for (&k, &w) in self.admissible.iter().zip(&c.params) {
            g.set_weight(k / n, k % n, w);
        }
        if let Some(b) = c.beta {
            g.set_beta(b);
        }
        g
    }
}

/// Embodied evaluation: the whole batch shares one world per generation.
pub struct ForagingObjective {
    pub codec: GenomeCodec,
    pub world: WorldConfig,
    pub seed: Seed,
    pub options: LifetimeOptions,
    /// The most recent lifetime, kept for logging.
    pub last: Option<LifetimeOutcome>,
}

impl Objective for ForagingObjective {
    fn evaluate(&mut self, candidates: &[Candidate], generation: usize) -> Result<Vec<f64>> {
        let genomes: Vec<IsingGenome> = candidates.iter().map(|c| self.codec.decode(c)).collect();
        let seed = self.seed.child(generation as u64).child(streams::WORLD);
        let outcome = run_lifetime(&genomes, &self.world, seed, self.options)?;
        let fitness = outcome.fitness.clone();
        self.last = Some(outcome);
        Ok(fitness)
    }
}
