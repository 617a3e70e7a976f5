//! Post-hoc analyses: lifespan generalizability, genetic perturbation decay,
//! fitness by evolutionary operator, and the Mann-Whitney U test.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ising::{IsingGenome, WEIGHT_BOUND};
use crate::lineage::{GenerationRecord, LineageTag};
use crate::rng::{streams, Seed};
use crate::stats::{argsort_desc, average_ranks, log_grid, mean};
use crate::world::{run_lifetime, LifetimeOptions, WorldConfig};

// ---------------------------------------------------------------------------
// generalizability

/// Growth speed of the mean energy when the lifespan is extended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generalizability {
    pub gamma: f64,
    pub t_train: usize,
    pub t_extend: usize,
    pub mean_energy_train: f64,
    pub mean_energy_extend: f64,
}

/// Time average of an energy series that starts at `t = 0`.
fn time_average(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::InsufficientData("an energy series needs at least two points".into()));
    }
    Ok(mean(series))
}

/// `(<E>_extend / t_extend) / (<E>_train / t_train)`, where each series holds
/// `E(0), E(1), ..., E(t)` and `<E>` is its time average. Linear growth from
/// zero gives exactly 1; growth that stalls after training gives less.
pub fn gamma_from_series(train: &[f64], extend: &[f64]) -> Result<Generalizability> {
    let e_train = time_average(train)?;
    let e_extend = time_average(extend)?;
    let (t_train, t_extend) = (train.len() - 1, extend.len() - 1);
    Ok(Generalizability {
        gamma: (e_extend / t_extend as f64) / (e_train / t_train as f64),
        t_train,
        t_extend,
        mean_energy_train: e_train,
        mean_energy_extend: e_extend,
    })
}

/// Runs the population once with lifespan `t_train` and once with
/// `t_extend` from the same seed, so the world starts identically, and
/// compares the population-mean energy growth.
pub fn generalizability(
    population: &[IsingGenome],
    world: &WorldConfig,
    t_train: usize,
    t_extend: usize,
    seed: Seed,
) -> Result<Generalizability> {
    if t_train == 0 || t_extend == 0 {
        return Err(Error::InvalidConfig("lifespans must be positive".into()));
    }
    let options = LifetimeOptions { record_traces: true, ..Default::default() };
    let mean_series = |lifespan: usize| -> Result<Vec<f64>> {
        let cfg = WorldConfig { lifespan, ..world.clone() };
        let out = run_lifetime(population, &cfg, seed, options)?;
        let traces = out.traces.expect("traces requested");
        let n = traces.len() as f64;
        let mut series = vec![0.0; lifespan + 1];
        series[0] = world.e_init;
        for t in &traces {
            for (k, e) in t.energy.iter().enumerate() {
                series[k + 1] += e / n;
            }
        }
        Ok(series)
    };
    gamma_from_series(&mean_series(t_train)?, &mean_series(t_extend)?)
}

// ---------------------------------------------------------------------------
// genetic perturbation

/// Adds `+f_pert` or `-f_pert` (fair coin each) to every existing edge
/// weight and clamps to the weight bounds. Adjacency and `beta` are kept.
pub fn perturb_genome<R: Rng + ?Sized>(genome: &IsingGenome, f_pert: f64, rng: &mut R) -> IsingGenome {
    let mut g = genome.clone();
    if f_pert == 0.0 {
        return g;
    }
    let edges = g.edges();
    let w = g.weights_mut();
    for k in edges {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        w[k] = (w[k] + sign * f_pert).clamp(-WEIGHT_BOUND, WEIGHT_BOUND);
    }
    g
}

/// `0` followed by 12 log-spaced magnitudes in `[0.01, 2]`.
pub fn default_perturbation_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    grid.extend(log_grid(0.01, 2.0, 12));
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSweep {
    pub grid: Vec<f64>,
    /// `samples[k]` holds one population-mean fitness per repeat at `grid[k]`.
    pub samples: Vec<Vec<f64>>,
}

impl PerturbationSweep {
    pub fn mean_fitness(&self) -> Vec<f64> {
        self.samples.iter().map(|s| mean(s)).collect()
    }
}

/// Perturbs the whole population at every magnitude and records the mean
/// fitness of one lifetime, `repeats` times. Repeat `r` uses the same world
/// seed at every magnitude.
pub fn perturbation_sweep(
    population: &[IsingGenome],
    world: &WorldConfig,
    grid: &[f64],
    repeats: usize,
    seed: Seed,
) -> Result<PerturbationSweep> {
    if grid.iter().any(|f| !(*f >= 0.0)) {
        return Err(Error::InvalidConfig("perturbation magnitudes must be non-negative".into()));
    }
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be positive".into()));
    }
    let samples = grid
        .par_iter()
        .enumerate()
        .map(|(k, &f)| {
            (0..repeats)
                .map(|r| {
                    let mut rng = seed.child(streams::PERTURB).child(k as u64).child(r as u64).rng();
                    let perturbed: Vec<_> = population.iter().map(|g| perturb_genome(g, f, &mut rng)).collect();
                    let out = run_lifetime(&perturbed, world, seed.child(r as u64), LifetimeOptions::default())?;
                    Ok(mean(&out.fitness))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerturbationSweep { grid: grid.to_vec(), samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `ln(fitness - baseline)` against the magnitude.
    pub exponent: f64,
    pub intercept: f64,
    /// Grid indices left out because `fitness - baseline <= 0`.
    pub excluded: Vec<usize>,
}

/// Least-squares exponential fit `fitness - baseline = exp(a + b f)`.
/// Needs at least four usable points.
pub fn decay_exponent(grid: &[f64], fitness: &[f64], baseline: f64) -> Result<DecayFit> {
    if grid.len() != fitness.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: fitness.len() });
    }
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for (k, (&x, &y)) in grid.iter().zip(fitness).enumerate() {
        let y = y - baseline;
        if y > 0.0 && y.is_finite() {
            pts.push((x, y.ln()));
        } else {
            excluded.push(k);
        }
    }
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!("{} usable points, need 4", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all magnitudes are equal".into()));
    }
    let exponent = sxy / sxx;
    Ok(DecayFit { exponent, intercept: my - exponent * mx, excluded })
}

// ---------------------------------------------------------------------------
// operator histograms

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorHistogram {
    pub tag: LineageTag,
    pub fitness: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Fitness histograms of the GA operators over generations `first..=last`,
/// on shared bin edges.
pub fn operator_histograms(
    records: &[GenerationRecord],
    first: usize,
    last: usize,
    edges: &[f64],
) -> Result<Vec<OperatorHistogram>> {
    if first > last {
        return Err(Error::InvalidConfig("empty generation window".into()));
    }
    let logged_max = records.iter().map(|r| r.generation).max();
    let logged_min = records.iter().map(|r| r.generation).min();
    match (logged_min, logged_max) {
        (Some(lo), Some(hi)) if first >= lo && last <= hi => {}
        _ => {
            return Err(Error::InsufficientData(format!(
                "generations {first}..={last} are not all logged"
            )))
        }
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("bin edges must be increasing".into()));
    }
    Ok([LineageTag::Copy, LineageTag::Mutate, LineageTag::Mate]
        .into_iter()
        .map(|tag| {
            let fitness: Vec<f64> = records
                .iter()
                .filter(|r| r.lineage == tag && (first..=last).contains(&r.generation))
                .map(|r| r.fitness)
                .collect();
            let counts = histogram(&fitness, edges);
            OperatorHistogram { tag, fitness, counts }
        })
        .collect())
}

/// Bins are half open except the last, which includes its right edge.
/// Values outside the edges are dropped.
pub fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let nb = edges.len() - 1;
    let mut counts = vec![0; nb];
    for &v in values {
        if v < edges[0] || v > edges[nb] {
            continue;
        }
        let k = edges.partition_point(|e| *e <= v).saturating_sub(1).min(nb - 1);
        counts[k] += 1;
    }
    counts
}

// ---------------------------------------------------------------------------
// Mann-Whitney U

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `a` tends to be larger than `b`.
    Greater,
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Pairs with `a > b`, ties counting one half.
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

/// Largest `|a| * |b|` for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 200;

pub fn mann_whitney_u(a: &[f64], b: &[f64], alternative: Alternative) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("Mann-Whitney needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidConfig("NaN in Mann-Whitney sample".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    let exact = na * nb <= EXACT_LIMIT;
    let (p_greater, p_less) = if exact {
        exact_tails(&ranks, na, u)
    } else {
        normal_tails(&pooled, na, nb, u)
    };
    let p = match alternative {
        Alternative::Greater => p_greater,
        Alternative::Less => p_less,
        Alternative::TwoSided => (2.0 * p_greater.min(p_less)).min(1.0),
    };
    Ok(MannWhitney { u, p, exact })
}

/// `(P(U >= u), P(U <= u))` under random relabelling of the pooled ranks.
/// Midranks are doubled so every rank sum is an integer.
fn exact_tails(ranks: &[f64], na: usize, u: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0f64; max_sum + 1]; na + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            for s in (r..=max_sum).rev() {
                upper[0][s] += lower[k - 1][s - r];
            }
        }
    }
    let total: f64 = ways[na].iter().sum();
    let offset = na * (na + 1); // doubled minimum rank sum
    let observed = (2.0 * u).round() as usize + offset;
    let (mut ge, mut le) = (0.0, 0.0);
    for (s, &w) in ways[na].iter().enumerate() {
        if s >= observed {
            ge += w;
        }
        if s <= observed {
            le += w;
        }
    }
    (ge / total, le / total)
}

/// Normal approximation with tie-corrected variance and a continuity
/// correction of one half.
fn normal_tails(pooled: &[f64], na: usize, nb: usize, u: f64) -> (f64, f64) {
    let n = (na + nb) as f64;
    let (fa, fb) = (na as f64, nb as f64);
    let mu = fa * fb / 2.0;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|v| **v == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = fa * fb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return (1.0, 1.0);
    }
    let sd = var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let z_greater = (u - mu - 0.5) / sd;
    let z_less = (u - mu + 0.5) / sd;
    (std_normal.sf(z_greater), std_normal.cdf(z_less))
}

// ---------------------------------------------------------------------------
// delta distributions

/// Mean `delta` of the `k` fittest individuals (all of them if fewer).
pub fn top_k_mean_delta(fitness: &[f64], delta: &[f64], k: usize) -> Result<f64> {
    if fitness.len() != delta.len() {
        return Err(Error::DimensionMismatch { expected: fitness.len(), found: delta.len() });
    }
    if fitness.is_empty() || k == 0 {
        return Err(Error::InsufficientData("no individuals selected".into()));
    }
    let top: Vec<f64> = argsort_desc(fitness).into_iter().take(k).map(|i| delta[i]).collect();
    Ok(mean(&top))
}
