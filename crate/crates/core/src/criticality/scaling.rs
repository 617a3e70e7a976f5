use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    default_grid, heat_capacity_curve, AnnealingSchedule, HeatCapacityCurve, SensorDataset,
    SensorMode,
};
use crate::error::{Error, Result};
use crate::ising::{GenomeInit, IsingGenome, Layout};
use crate::rng::Seed;
use crate::stats::median;

/// Rescaling applied to the random weights before measuring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightNormalization {
    /// Divide by the Frobenius norm of `A ∘ J`, then multiply by `scale`.
    Frobenius { scale: f64 },
    /// Divide by `||A ∘ J||_F / sqrt(N)`, the root-mean-square row norm, then
    /// multiply by `scale`. Local fields stay of order `scale` whatever the
    /// size, so the peak location does not drift with `N`.
    RowRms { scale: f64 },
    /// Leave the drawn weights alone.
    None,
}

/// Row norm used by default. Puts the ensemble peaks near `beta = 1.5`.
pub const DEFAULT_ROW_RMS: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub grid: Vec<f64>,
    pub schedule: AnnealingSchedule,
    /// Number of `U(-1, 1)` sensor vectors per genome.
    pub sensor_rows: usize,
    pub normalization: WeightNormalization,
    pub init: GenomeInit,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            grid: default_grid(),
            schedule: AnnealingSchedule::default(),
            sensor_rows: 100,
            normalization: WeightNormalization::RowRms { scale: DEFAULT_ROW_RMS },
            init: GenomeInit::default(),
        }
    }
}

/// A random network with one third sensors, one third motors, all admissible
/// edges, `beta = 1`, and weights normalized per `config`.
pub fn random_scaling_genome<R: Rng + ?Sized>(n: usize, config: &ScalingConfig, rng: &mut R) -> IsingGenome {
    let mut g = IsingGenome::random(Layout::thirds(n), 1.0, &config.init, rng);
    let target = match config.normalization {
        WeightNormalization::Frobenius { scale } => Some(scale),
        WeightNormalization::RowRms { scale } => Some(scale * (n as f64).sqrt()),
        WeightNormalization::None => None,
    };
    if let Some(scale) = target {
        let norm = g.frobenius_norm();
        if norm > 0.0 {
            for k in 0..n * n {
                let w = g.weights()[k] * scale / norm;
                g.set_weight(k / n, k % n, w);
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub n: usize,
    pub curves: Vec<HeatCapacityCurve>,
    /// Pointwise median of the ensemble's curves.
    pub median_curve: Vec<f64>,
    pub peak_values: Vec<f64>,
    pub peak_betas: Vec<f64>,
    pub median_peak_value: f64,
    pub median_peak_beta: f64,
}

/// Heat-capacity ensembles of random networks for each size.
pub fn scaling_analysis(
    sizes: &[usize],
    ensemble_size: usize,
    config: &ScalingConfig,
    seed: Seed,
) -> Result<Vec<SizeSummary>> {
    if ensemble_size == 0 {
        return Err(Error::InvalidConfig("ensemble_size must be positive".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            if n < 3 {
                return Err(Error::InvalidConfig(format!("network size {n} too small")));
            }
            let size_seed = seed.child(n as u64);
            let curves = (0..ensemble_size)
                .into_par_iter()
                .map(|m| {
                    let member = size_seed.child(m as u64);
                    let mut rng = member.child(0).rng();
                    let g = random_scaling_genome(n, config, &mut rng);
                    let data = SensorDataset::uniform(n / 3, config.sensor_rows, &mut rng);
                    heat_capacity_curve(&g, &config.grid, SensorMode::Clamped(&data), &config.schedule, member.child(1))
                })
                .collect::<Result<Vec<_>>>()?;
            let median_curve = (0..config.grid.len())
                .map(|k| median(&curves.iter().map(|c| c.values[k]).collect::<Vec<_>>()))
                .collect();
            let peak_values: Vec<f64> = curves.iter().map(|c| c.peak_value()).collect();
            let peak_betas: Vec<f64> = curves.iter().map(|c| c.peak_beta()).collect();
            Ok(SizeSummary {
                n,
                median_peak_value: median(&peak_values),
                median_peak_beta: median(&peak_betas),
                curves,
                median_curve,
                peak_values,
                peak_betas,
            })
        })
        .collect()
}
