//! Distance to criticality from the heat capacity of a network.
//!
//! For a grid of scale factors `c` the network is annealed to the effective
//! inverse temperature `c * beta` and the variance of its energy measured;
//! `C_H(c) = c^2 beta^2 Var(e)`. The argmax `c_crit` gives the distance to
//! criticality `delta = log10(c_crit)`: negative is subcritical (ordered),
//! positive supercritical (disordered).

mod scaling;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingGenome, Network, NetworkState};
use crate::rng::Seed;
use crate::stats::{log_grid, mean};
use crate::world::SensorReading;

pub use scaling::{
    random_scaling_genome, scaling_analysis, ScalingConfig, SizeSummary, WeightNormalization, DEFAULT_ROW_RMS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorProvenance {
    Generation0,
    FinalGeneration,
    Thermalized,
    /// Synthetic values drawn from `U(-1, 1)`.
    Uniform,
}

impl SensorProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            SensorProvenance::Generation0 => "generation0",
            SensorProvenance::FinalGeneration => "final_generation",
            SensorProvenance::Thermalized => "thermalized",
            SensorProvenance::Uniform => "uniform",
        }
    }
}

/// Observed sensor vectors used to clamp the sensor neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorDataset {
    width: usize,
    values: Vec<f64>,
    pub provenance: SensorProvenance,
}

impl SensorDataset {
    pub fn new(width: usize, values: Vec<f64>, provenance: SensorProvenance) -> Result<Self> {
        if width == 0 || values.is_empty() || values.len() % width != 0 {
            return Err(Error::InsufficientData("sensor dataset must hold whole, non-empty rows".into()));
        }
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidConfig(format!("sensor value {v} outside [-1, 1]")));
        }
        Ok(SensorDataset { width, values, provenance })
    }

    pub fn from_readings<'a, I>(readings: I, provenance: SensorProvenance) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SensorReading>,
    {
        let values = readings.into_iter().flat_map(|r| r.to_array()).collect();
        SensorDataset::new(4, values, provenance)
    }

    pub fn uniform<R: Rng + ?Sized>(width: usize, rows: usize, rng: &mut R) -> Self {
        let values = (0..width * rows).map(|_| rng.random_range(-1.0..=1.0)).collect();
        SensorDataset { width, values, provenance: SensorProvenance::Uniform }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width)
    }
}

/// How sensor neurons are treated while measuring the energy distribution.
#[derive(Debug, Clone, Copy)]
pub enum SensorMode<'a> {
    /// Sensors are ordinary `±1` spins updated like every other neuron.
    Thermalized,
    /// Sensors are clamped to vectors drawn from the dataset.
    Clamped(&'a SensorDataset),
}

impl SensorMode<'_> {
    pub fn provenance(&self) -> SensorProvenance {
        match self {
            SensorMode::Thermalized => SensorProvenance::Thermalized,
            SensorMode::Clamped(d) => d.provenance,
        }
    }
}

/// Geometric annealing from `beta_target / start_scale` down to the target
/// temperature, then burn-in and measurement at the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealingSchedule {
    /// Ratio of the starting temperature to the target temperature.
    pub start_scale: f64,
    pub n_stages: usize,
    pub sweeps_per_stage: usize,
    pub burn_in: usize,
    pub measurement_sweeps: usize,
    /// Measurement sweeps per clamped sensor vector. Each vector gets its
    /// own annealing run.
    pub sensor_refresh: usize,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        AnnealingSchedule {
            start_scale: 20.0,
            n_stages: 20,
            sweeps_per_stage: 50,
            burn_in: 100,
            measurement_sweeps: 2000,
            sensor_refresh: 100,
        }
    }
}

impl AnnealingSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.start_scale >= 1.0) || self.measurement_sweeps < 2 || self.sensor_refresh == 0 {
            return Err(Error::InvalidConfig(
                "annealing: start_scale >= 1, measurement_sweeps >= 2 and sensor_refresh >= 1 required"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Inverse temperatures of the annealing stages, ending at `beta_target`.
    pub fn stage_betas(&self, beta_target: f64) -> Vec<f64> {
        match self.n_stages {
            0 => vec![],
            1 => vec![beta_target],
            n => (0..n)
                .map(|k| {
                    let remaining = (n - 1 - k) as f64 / (n - 1) as f64;
                    beta_target / self.start_scale.powf(remaining)
                })
                .collect(),
        }
    }
}

/// Default grid: 60 log-spaced points over `[0.01, 100]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 60)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Energy statistics at `c_beta * beta`.
///
/// The measurement is split into blocks of `sensor_refresh` sweeps (one
/// block in thermalized mode). Each block clamps a freshly drawn sensor
/// vector, anneals down from `start_scale` times the target temperature,
/// burns in and then records the energy after every sweep. The reported
/// variance is the mean within-block variance, i.e. the energy fluctuation
/// of the clamped network averaged over observed inputs; the reported mean
/// is the grand mean.
pub fn estimate_var_energy<R: Rng + ?Sized>(
    genome: &IsingGenome,
    c_beta: f64,
    mode: SensorMode<'_>,
    schedule: &AnnealingSchedule,
    rng: &mut R,
) -> Result<EnergyMoments> {
    schedule.validate()?;
    let sensors = genome.sensor_indices();
    let (mut net, dataset) = match mode {
        SensorMode::Thermalized => (Network::all_free(genome), None),
        SensorMode::Clamped(d) => {
            if d.is_empty() {
                return Err(Error::InsufficientData("clamped mode needs sensor data".into()));
            }
            if d.width() != sensors.len() {
                return Err(Error::DimensionMismatch { expected: sensors.len(), found: d.width() });
            }
            (Network::new(genome), Some(d))
        }
    };
    let mut state = NetworkState::random(genome, rng);
    if dataset.is_none() {
        for &i in &sensors {
            state.spins[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    }
    let s = &mut state.spins;
    let target = c_beta * genome.beta();
    let stages = schedule.stage_betas(target);

    let block_len = match dataset {
        Some(_) => schedule.sensor_refresh.min(schedule.measurement_sweeps),
        None => schedule.measurement_sweeps,
    };
    let mut remaining = schedule.measurement_sweeps;
    let (mut total, mut grand_sum, mut weighted_var) = (0.0, 0.0, 0.0);
    while remaining > 0 {
        let len = block_len.min(remaining);
        remaining -= len;
        if let Some(d) = dataset {
            let row = d.row(rng.random_range(0..d.len()));
            for (&i, &v) in sensors.iter().zip(row) {
                s[i] = v;
            }
        }
        for &beta in &stages {
            net.set_beta(beta);
            net.thermalize(s, schedule.sweeps_per_stage, rng);
        }
        net.set_beta(target);
        net.thermalize(s, schedule.burn_in, rng);

        // Welford within the block
        let (mut count, mut m, mut m2) = (0.0, 0.0, 0.0);
        for _ in 0..len {
            net.sweep(s, rng);
            let e = net.energy(s);
            count += 1.0;
            let delta = e - m;
            m += delta / count;
            m2 += delta * (e - m);
        }
        total += count;
        grand_sum += m * count;
        weighted_var += m2;
    }
    Ok(EnergyMoments { mean: grand_sum / total, variance: (weighted_var / total).max(0.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatCapacityCurve {
    /// Genome inverse temperature the grid scales.
    pub beta: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub mean_energy: Vec<f64>,
    pub c_beta_crit: f64,
    /// `log10(c_beta_crit)`.
    pub delta: f64,
}

impl HeatCapacityCurve {
    pub fn from_values(beta: f64, grid: Vec<f64>, values: Vec<f64>, mean_energy: Vec<f64>) -> Self {
        let k = peak_index(&grid, &values);
        let c_beta_crit = grid[k];
        HeatCapacityCurve { beta, grid, values, mean_energy, c_beta_crit, delta: c_beta_crit.log10() }
    }

    pub fn peak_value(&self) -> f64 {
        self.values[peak_index(&self.grid, &self.values)]
    }

    /// Effective inverse temperature at the peak, `c_crit * beta`.
    pub fn peak_beta(&self) -> f64 {
        self.c_beta_crit * self.beta
    }
}

/// Argmax with ties going to the smaller grid value.
fn peak_index(grid: &[f64], values: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..values.len() {
        let better = values[k] > values[best] || (values[k] == values[best] && grid[k] < grid[best]);
        if better {
            best = k;
        }
    }
    best
}

/// Heat capacity over `grid`; grid point `k` draws from `seed.child(k)`, so
/// the result does not depend on the thread count.
pub fn heat_capacity_curve(
    genome: &IsingGenome,
    grid: &[f64],
    mode: SensorMode<'_>,
    schedule: &AnnealingSchedule,
    seed: Seed,
) -> Result<HeatCapacityCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty c_beta grid".into()));
    }
    let beta = genome.beta();
    let moments: Vec<EnergyMoments> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &c)| estimate_var_energy(genome, c, mode, schedule, &mut seed.child(k as u64).rng()))
        .collect::<Result<_>>()?;
    let values = grid
        .iter()
        .zip(&moments)
        .map(|(c, m)| c * c * beta * beta * m.variance)
        .collect();
    let mean_energy = moments.iter().map(|m| m.mean).collect();
    Ok(HeatCapacityCurve::from_values(beta, grid.to_vec(), values, mean_energy))
}

/// Pointwise mean of curves sharing one grid.
pub fn mean_curve(curves: &[HeatCapacityCurve]) -> Vec<f64> {
    let len = curves.first().map_or(0, |c| c.values.len());
    (0..len)
        .map(|k| mean(&curves.iter().map(|c| c.values[k]).collect::<Vec<_>>()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorModeComparison {
    pub grid: Vec<f64>,
    pub thermalized: Vec<f64>,
    pub generation0: Vec<f64>,
    pub final_generation: Vec<f64>,
}

/// Mean heat-capacity curves of `genomes` under the three sensor treatments.
pub fn compare_sensor_modes(
    genomes: &[IsingGenome],
    gen0: &SensorDataset,
    final_data: &SensorDataset,
    grid: &[f64],
    schedule: &AnnealingSchedule,
    seed: Seed,
) -> Result<SensorModeComparison> {
    if genomes.is_empty() {
        return Err(Error::InsufficientData("no genomes to compare".into()));
    }
    if gen0.is_empty() || final_data.is_empty() {
        return Err(Error::InsufficientData("missing sensor logs".into()));
    }
    let modes = [SensorMode::Thermalized, SensorMode::Clamped(gen0), SensorMode::Clamped(final_data)];
    let mut out = Vec::with_capacity(3);
    for mode in modes {
        let curves = genomes
            .iter()
            .enumerate()
            .map(|(i, g)| heat_capacity_curve(g, grid, mode, schedule, seed.child(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        out.push(mean_curve(&curves));
    }
    let final_generation = out.pop().unwrap_or_default();
    let generation0 = out.pop().unwrap_or_default();
    let thermalized = out.pop().unwrap_or_default();
    Ok(SensorModeComparison { grid: grid.to_vec(), thermalized, generation0, final_generation })
}
