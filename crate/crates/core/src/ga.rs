//! Genetic algorithm: elitism, mutated duplicates of the top individuals,
//! and mating.
//!
//! One generation maps a ranked population of 50 onto
//! `20 Copy | 15 Mutate | 15 Mate`:
//! the 20 fittest are copied unchanged, ranks 1-10 then 1-5 are duplicated
//! and each duplicate is mutated with probability `mutation_prob`, and the
//! last 15 slots are children of two distinct parents drawn uniformly from
//! the 35 individuals placed above them.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingGenome;
use crate::lineage::LineageTag;
use crate::stats::argsort_desc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub n_elite: usize,
    pub n_mutants: usize,
    pub n_mated: usize,
    /// How many of the top individuals are cycled into the mutant slots.
    pub n_duplicated: usize,
    /// Chance that a duplicate receives one mutation event.
    pub mutation_prob: f64,
    /// Standard deviation of the multiplicative `beta` noise around 1.
    pub beta_noise_sigma: f64,
    /// Chance that a mutation event toggles one admissible edge.
    pub edge_flip_prob: f64,
    pub weight_bounds: [f64; 2],
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            n_elite: 20,
            n_mutants: 15,
            n_mated: 15,
            n_duplicated: 10,
            mutation_prob: 0.10,
            beta_noise_sigma: 0.02,
            edge_flip_prob: 0.5,
            weight_bounds: [-2.0, 2.0],
        }
    }
}

impl GaConfig {
    pub fn population_size(&self) -> usize {
        self.n_elite + self.n_mutants + self.n_mated
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("ga: {m}")));
        if self.n_duplicated == 0 && self.n_mutants > 0 {
            return bad("n_duplicated must be positive when mutants are requested");
        }
        if self.n_duplicated > self.population_size() {
            return bad("n_duplicated exceeds the population");
        }
        if self.n_mated > 0 && self.n_elite + self.n_mutants < 2 {
            return bad("mating needs at least two parents");
        }
        for (name, p) in [("mutation_prob", self.mutation_prob), ("edge_flip_prob", self.edge_flip_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must be a probability"));
            }
        }
        if !(self.beta_noise_sigma >= 0.0) {
            return bad("beta_noise_sigma must be non-negative");
        }
        if !(self.weight_bounds[0] < self.weight_bounds[1]) {
            return bad("weight_bounds must be increasing");
        }
        Ok(())
    }
}

/// Mutation and mating operators for one genotype representation.
pub trait Variation<G> {
    fn mutate<R: Rng + ?Sized>(&self, genome: &G, rng: &mut R) -> G;
    fn mate<R: Rng + ?Sized>(&self, a: &G, b: &G, rng: &mut R) -> Result<G>;
}

/// One mutation event on an Ising genome:
/// with probability `edge_flip_prob` toggle one uniformly chosen admissible
/// entry of `A`; resample one existing edge weight from `U(lo, hi)`; scale
/// `beta` by `N(1, beta_noise_sigma)`.
pub fn mutate<R: Rng + ?Sized>(genome: &IsingGenome, rng: &mut R, config: &GaConfig) -> IsingGenome {
    let mut g = genome.clone();
    if rng.random::<f64>() < config.edge_flip_prob {
        let admissible = g.mask().admissible();
        if !admissible.is_empty() {
            let k = admissible[rng.random_range(0..admissible.len())];
            let a = g.adjacency_mut();
            a[k] = !a[k];
        }
    }
    let edges = g.edges();
    if !edges.is_empty() {
        let k = edges[rng.random_range(0..edges.len())];
        let [lo, hi] = config.weight_bounds;
        g.weights_mut()[k] = rng.random_range(lo..=hi);
    }
    let noise = Normal::new(1.0, config.beta_noise_sigma)
        .expect("beta_noise_sigma validated non-negative")
        .sample(rng);
    let beta = g.beta() * noise;
    if beta > 0.0 {
        g.set_beta(beta);
    }
    g
}

/// Weighted-average offspring with `w ~ U(0, 1)`.
pub fn mate<R: Rng + ?Sized>(a: &IsingGenome, b: &IsingGenome, rng: &mut R) -> Result<IsingGenome> {
    let w = rng.random::<f64>();
    mate_with_weight(a, b, w, rng)
}

/// `J' = w J_a + (1 - w) J_b`, `beta' = w beta_a + (1 - w) beta_b`, and each
/// adjacency entry taken from `a` with probability `w`, otherwise from `b`.
pub fn mate_with_weight<R: Rng + ?Sized>(
    a: &IsingGenome,
    b: &IsingGenome,
    w: f64,
    rng: &mut R,
) -> Result<IsingGenome> {
    if a.n() != b.n() || a.mask() != b.mask() {
        return Err(Error::MaskMismatch);
    }
    let mut child = a.clone();
    for (k, (ja, jb)) in a.weights().iter().zip(b.weights()).enumerate() {
        child.weights_mut()[k] = w * ja + (1.0 - w) * jb;
    }
    for k in a.mask().admissible() {
        let (ea, eb) = (a.adjacency()[k], b.adjacency()[k]);
        child.adjacency_mut()[k] = if ea == eb { ea } else if rng.random::<f64>() < w { ea } else { eb };
    }
    child.set_beta(w * a.beta() + (1.0 - w) * b.beta());
    Ok(child)
}

/// Ising-genome operators parameterised by a [`GaConfig`].
#[derive(Debug, Clone, Copy)]
pub struct IsingVariation<'a>(pub &'a GaConfig);

impl Variation<IsingGenome> for IsingVariation<'_> {
    fn mutate<R: Rng + ?Sized>(&self, genome: &IsingGenome, rng: &mut R) -> IsingGenome {
        mutate(genome, rng, self.0)
    }

    fn mate<R: Rng + ?Sized>(&self, a: &IsingGenome, b: &IsingGenome, rng: &mut R) -> Result<IsingGenome> {
        mate(a, b, rng)
    }
}

/// Unbounded real vectors: mutation redraws one coordinate from
/// `N(current, mutation_sigma)`, mating is a scalar-weighted average.
#[derive(Debug, Clone, Copy)]
pub struct RealVectorVariation {
    pub mutation_sigma: f64,
}

impl Variation<Vec<f64>> for RealVectorVariation {
    fn mutate<R: Rng + ?Sized>(&self, genome: &Vec<f64>, rng: &mut R) -> Vec<f64> {
        let mut x = genome.clone();
        if !x.is_empty() {
            let k = rng.random_range(0..x.len());
            let n = Normal::new(x[k], self.mutation_sigma).expect("finite sigma");
            x[k] = n.sample(rng);
        }
        x
    }

    fn mate<R: Rng + ?Sized>(&self, a: &Vec<f64>, b: &Vec<f64>, rng: &mut R) -> Result<Vec<f64>> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        let w = rng.random::<f64>();
        Ok(a.iter().zip(b).map(|(x, y)| w * x + (1.0 - w) * y).collect())
    }
}

/// Produces the next generation and the lineage tag of every slot.
pub fn next_generation<G, V, R>(
    population: &[G],
    fitness: &[f64],
    variation: &V,
    config: &GaConfig,
    rng: &mut R,
) -> Result<(Vec<G>, Vec<LineageTag>)>
where
    G: Clone,
    V: Variation<G>,
    R: Rng + ?Sized,
{
    let size = config.population_size();
    if population.len() != size {
        return Err(Error::PopulationSize { expected: size, found: population.len() });
    }
    if fitness.len() != size {
        return Err(Error::DimensionMismatch { expected: size, found: fitness.len() });
    }
    let ranked = argsort_desc(fitness);
    let mut next = Vec::with_capacity(size);
    let mut tags = Vec::with_capacity(size);

    for &i in ranked.iter().take(config.n_elite) {
        next.push(population[i].clone());
        tags.push(LineageTag::Copy);
    }
    let n_dup = config.n_duplicated.min(size);
    for slot in 0..config.n_mutants {
        let parent = &population[ranked[slot % n_dup]];
        let child = if rng.random::<f64>() < config.mutation_prob {
            variation.mutate(parent, rng)
        } else {
            parent.clone()
        };
        next.push(child);
        tags.push(LineageTag::Mutate);
    }
    let pool = next.len();
    for _ in 0..config.n_mated {
        let pick = index::sample(rng, pool, 2);
        let child = variation.mate(&next[pick.index(0)], &next[pick.index(1)], rng)?;
        next.push(child);
        tags.push(LineageTag::Mate);
    }
    Ok((next, tags))
}
