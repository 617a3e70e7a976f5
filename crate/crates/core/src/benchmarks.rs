//! Translated benchmark functions and the GA-versus-ES loss comparison.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::es::{run_es_generation, EsConfig, EsState, FnObjective};
use crate::ga::{next_generation, GaConfig, RealVectorVariation};
use crate::rng::{streams, Seed};
use crate::stats::{median, quantile};

pub const RASTRIGIN_A: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Function {
    Rastrigin,
    Rosenbrock,
    Sphere,
}

impl Function {
    pub const ALL: [Function; 3] = [Function::Rastrigin, Function::Rosenbrock, Function::Sphere];

    pub fn as_str(self) -> &'static str {
        match self {
            Function::Rastrigin => "rastrigin",
            Function::Rosenbrock => "rosenbrock",
            Function::Sphere => "sphere",
        }
    }

    /// The untranslated function at `z`.
    pub fn raw(self, z: &[f64]) -> f64 {
        match self {
            Function::Rastrigin => {
                RASTRIGIN_A * z.len() as f64
                    + z.iter().map(|&v| v * v - RASTRIGIN_A * (2.0 * PI * v).cos()).sum::<f64>()
            }
            Function::Rosenbrock => z
                .windows(2)
                .map(|w| {
                    let a = w[1] - w[0] * w[0];
                    let b = 1.0 - w[0];
                    100.0 * a * a + b * b
                })
                .sum(),
            Function::Sphere => z.iter().map(|v| v * v).sum(),
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Function {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Function::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown benchmark function {s:?}")))
    }
}

/// A benchmark function evaluated at `z = x + shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkObjective {
    pub function: Function,
    pub shift: Vec<f64>,
}

impl BenchmarkObjective {
    pub fn new(function: Function, shift: Vec<f64>) -> Self {
        BenchmarkObjective { function, shift }
    }

    /// Shift drawn from `N(0, 1)` per coordinate.
    pub fn random<R: Rng + ?Sized>(function: Function, dim: usize, rng: &mut R) -> Self {
        let shift = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        BenchmarkObjective { function, shift }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let z: Vec<f64> = x.iter().zip(&self.shift).map(|(a, c)| a + c).collect();
        Ok(self.function.raw(&z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ga,
    Es,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ga => "ga",
            Algorithm::Es => "es",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    /// Generations per run. No default: the budget must be chosen.
    pub generations: usize,
    #[serde(default)]
    pub ga: GaConfig,
    /// Standard deviation of the GA's coordinate resampling.
    #[serde(default = "default_mutation_sigma")]
    pub ga_mutation_sigma: f64,
    pub es: EsConfig,
    /// Standard deviation of the initial GA population and the initial ES
    /// mean, both drawn around 0.
    #[serde(default = "default_init_sigma")]
    pub init_sigma: f64,
}

fn default_dim() -> usize {
    50
}
fn default_runs() -> usize {
    25
}
fn default_mutation_sigma() -> f64 {
    1.0
}
fn default_init_sigma() -> f64 {
    1.0
}

impl BenchmarkConfig {
    /// Dimension 50, 25 runs, default GA, ES with `alpha = sigma = 0.1` and
    /// no weight bounds.
    pub fn new(generations: usize) -> Self {
        BenchmarkConfig {
            dim: default_dim(),
            n_runs: default_runs(),
            generations,
            ga: GaConfig::default(),
            ga_mutation_sigma: default_mutation_sigma(),
            es: EsConfig { bounds: None, ..EsConfig::new(0.1, 0.1) },
            init_sigma: default_init_sigma(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("benchmark: {m}")));
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if self.n_runs == 0 || self.generations == 0 {
            return bad("n_runs and generations must be positive");
        }
        if !(self.ga_mutation_sigma >= 0.0) || !(self.init_sigma >= 0.0) {
            return bad("sigmas must be non-negative");
        }
        self.ga.validate()?;
        self.es.validate()
    }
}

/// Best-so-far loss after each generation, one row per run.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurves {
    pub function: Function,
    pub algorithm: Algorithm,
    pub raw: Vec<Vec<f64>>,
    /// Median over runs of each run's largest best-so-far loss.
    pub normalizer: f64,
    pub normalized: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub p25: Vec<f64>,
    pub p50: Vec<f64>,
    pub p75: Vec<f64>,
}

impl LossCurves {
    pub fn from_raw(function: Function, algorithm: Algorithm, raw: Vec<Vec<f64>>) -> Self {
        let maxima: Vec<f64> =
            raw.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let normalizer = median(&maxima);
        let normalized = raw
            .iter()
            .map(|r| r.iter().map(|v| if normalizer > 0.0 { v / normalizer } else { *v }).collect())
            .collect();
        LossCurves { function, algorithm, raw, normalizer, normalized }
    }

    pub fn generations(&self) -> usize {
        self.raw.first().map_or(0, Vec::len)
    }

    /// Pointwise quartiles of the normalized curves.
    pub fn bands(&self) -> Bands {
        let g = self.generations();
        let column = |t: usize| self.normalized.iter().map(|r| r[t]).collect::<Vec<_>>();
        Bands {
            p25: (0..g).map(|t| quantile(&column(t), 0.25)).collect(),
            p50: (0..g).map(|t| quantile(&column(t), 0.50)).collect(),
            p75: (0..g).map(|t| quantile(&column(t), 0.75)).collect(),
        }
    }

    /// First generation whose normalized loss is below `threshold`, per run.
    pub fn generations_to(&self, threshold: f64) -> Vec<Option<usize>> {
        self.normalized.iter().map(|r| r.iter().position(|&v| v < threshold)).collect()
    }

    /// Median of [`generations_to`](Self::generations_to); runs that never
    /// get there count as infinitely slow.
    pub fn median_generations_to(&self, threshold: f64) -> f64 {
        let mut g: Vec<f64> = self
            .generations_to(threshold)
            .into_iter()
            .map(|o| o.map_or(f64::INFINITY, |t| t as f64))
            .collect();
        g.sort_by(f64::total_cmp);
        let n = g.len();
        if n == 0 {
            return f64::NAN;
        }
        if n % 2 == 1 {
            g[n / 2]
        } else {
            // written out so that two infinite middles stay infinite
            let (a, b) = (g[n / 2 - 1], g[n / 2]);
            if a == b { a } else { 0.5 * (a + b) }
        }
    }

    pub fn final_raw(&self) -> Vec<f64> {
        self.raw.iter().map(|r| *r.last().expect("non-empty curve")).collect()
    }
}

/// Best-so-far curve of one GA run on real vectors.
pub fn run_ga(
    objective: &BenchmarkObjective,
    config: &BenchmarkConfig,
    seed: Seed,
) -> Result<Vec<f64>> {
    let mut rng = seed.child(streams::EVOLVE).rng();
    let mut init = seed.child(streams::INIT).rng();
    let variation = RealVectorVariation { mutation_sigma: config.ga_mutation_sigma };
    let mut pop: Vec<Vec<f64>> = (0..config.ga.population_size())
        .map(|_| {
            (0..config.dim).map(|_| config.init_sigma * init.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    let mut curve = Vec::with_capacity(config.generations);
    for g in 0..config.generations {
        let losses = pop.iter().map(|x| objective.evaluate(x)).collect::<Result<Vec<_>>>()?;
        best = losses.iter().copied().fold(best, f64::min);
        curve.push(best);
        if g + 1 < config.generations {
            let fitness: Vec<f64> = losses.iter().map(|l| -l).collect();
            pop = next_generation(&pop, &fitness, &variation, &config.ga, &mut rng)?.0;
        }
    }
    Ok(curve)
}

/// Best-so-far curve of one ES run; the mean starts from a random point.
pub fn run_es(
    objective: &BenchmarkObjective,
    config: &BenchmarkConfig,
    seed: Seed,
) -> Result<Vec<f64>> {
    let mut rng = seed.child(streams::EVOLVE).rng();
    let mut init = seed.child(streams::INIT).rng();
    let mean = (0..config.dim).map(|_| config.init_sigma * init.sample::<f64, _>(StandardNormal)).collect();
    let mut state = EsState::new(mean, None);
    let mut f = FnObjective(|c: &crate::es::Candidate| {
        -objective.evaluate(&c.params).expect("candidate has the objective's dimension")
    });
    let mut best = f64::INFINITY;
    let mut curve = Vec::with_capacity(config.generations);
    for g in 0..config.generations {
        let step = run_es_generation(&mut f, &state, &config.es, g, &mut rng)?;
        best = step.fitness.iter().map(|v| -v).fold(best, f64::min);
        curve.push(best);
        state = step.next;
    }
    Ok(curve)
}

/// Runs both algorithms `n_runs` times on `function`. Run `r` of either
/// algorithm sees the same random translation.
pub fn run_comparison(
    function: Function,
    config: &BenchmarkConfig,
    seed: Seed,
) -> Result<[LossCurves; 2]> {
    config.validate()?;
    let fseed = seed.child(function as u64);
    let runs = (0..config.n_runs)
        .into_par_iter()
        .map(|r| {
            let rs = fseed.child(r as u64);
            let obj = BenchmarkObjective::random(function, config.dim, &mut rs.child(streams::OBJECTIVE).rng());
            Ok((run_ga(&obj, config, rs.child(1))?, run_es(&obj, config, rs.child(2))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (ga, es): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    Ok([LossCurves::from_raw(function, Algorithm::Ga, ga), LossCurves::from_raw(function, Algorithm::Es, es)])
}
