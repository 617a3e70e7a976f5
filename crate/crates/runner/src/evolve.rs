//! Evolution runs: the generation loop, its logs and checkpoints.

use std::path::Path;

use critevo::criticality::{heat_capacity_curve, SensorDataset, SensorMode, SensorProvenance};
use critevo::evolution::{EsEvolution, Evolution, GaEvolution, GenerationReport};
use critevo::rng::{streams, Seed};
use critevo::stats::{argsort_desc, mean, median};
use critevo::world::LifetimeOptions;
use rayon::prelude::*;

use crate::artifacts::{
    checkpoint_path, latest_checkpoint, prepare_run_dir, write_sensor_log, write_traces, Checkpoint, PopulationRecord, RunOptions,
    SeedRecord, FINAL_POPULATION, SENSORS_FINAL, SENSORS_GEN0,
};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Result, RunnerError};
use crate::table::{truncate_from, Table};

pub const GENERATIONS_FILE: &str = "generations.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DELTA_FILE: &str = "delta.csv";
pub const TRACES_FILE: &str = "traces_final.csv";

pub const GENERATION_COLUMNS: [&str; 4] = ["generation", "agent_id", "fitness", "lineage_op"];
pub const SUMMARY_COLUMNS: [&str; 4] = ["generation", "best", "mean", "median"];
pub const DELTA_COLUMNS: [&str; 5] = ["generation", "agent_id", "fitness", "c_beta_crit", "delta"];

fn fresh_evolution(cfg: &ExperimentConfig, seed: Seed) -> Result<Evolution> {
    let g = &cfg.genome;
    Ok(match cfg.experiment {
        ExperimentKind::EvolveGa => Evolution::Ga(GaEvolution::random(
            g.layout(),
            g.beta_init,
            &g.init,
            cfg.ga.clone(),
            cfg.world.clone(),
            seed,
        )?),
        ExperimentKind::EvolveEs => Evolution::Es(EsEvolution::random(
            g.layout(),
            g.beta_init,
            &g.init,
            cfg.es()?.clone(),
            cfg.world.clone(),
            seed,
        )?),
        other => return Err(RunnerError::Config(format!("{other} is not an evolution experiment"))),
    })
}

/// Runs (or continues) one replicate of an evolution experiment in `dir`.
pub fn run_evolution(cfg: &ExperimentConfig, replicate: usize, dir: &Path, options: RunOptions) -> Result<()> {
    cfg.validate()?;
    let generations = cfg.generations()?;
    let seed_record = SeedRecord::new(cfg.seed, replicate);
    let seed = seed_record.seed();
    let resumed = prepare_run_dir(dir, cfg, seed_record, options)?;

    let mut evolution = None;
    if resumed {
        if let Some(path) = latest_checkpoint(dir, generations)? {
            let cp = Checkpoint::load(&path)?;
            if cp.config != *cfg || cp.seed != seed_record {
                return Err(RunnerError::ResumeMismatch(format!("{} belongs to a different run", path.display())));
            }
            evolution = Some(cp.restore()?);
        }
    }
    let mut evolution = match evolution {
        Some(e) => e,
        None => {
            let e = fresh_evolution(cfg, seed)?;
            Checkpoint::capture(cfg, seed_record, &e).save(&checkpoint_path(dir, 0))?;
            e
        }
    };
    let start = evolution.generation();
    for (file, columns) in [
        (GENERATIONS_FILE, &GENERATION_COLUMNS[..]),
        (SUMMARY_FILE, &SUMMARY_COLUMNS[..]),
        (DELTA_FILE, &DELTA_COLUMNS[..]),
    ] {
        truncate_from(&dir.join(file), columns, 0, start)?;
    }
    let append = start > 0;
    let mut records = Table::open(&dir.join(GENERATIONS_FILE), &GENERATION_COLUMNS, append)?;
    let mut summary = Table::open(&dir.join(SUMMARY_FILE), &SUMMARY_COLUMNS, append)?;
    let mut deltas = Table::open(&dir.join(DELTA_FILE), &DELTA_COLUMNS, append)?;

    for generation in start..generations {
        let last = generation + 1 == generations;
        let every = cfg.evolution.delta_every;
        let log_delta = every > 0 && (generation % every == 0 || last);
        let lifetime_options = LifetimeOptions {
            record_sensors: generation == 0 || last || log_delta,
            record_traces: last && cfg.evolution.record_traces,
        };
        let report = evolution.step(lifetime_options)?;

        for (agent, (fitness, tag)) in report.fitness.iter().zip(&report.tags).enumerate() {
            records.row(&[&generation, &agent, fitness, tag])?;
        }
        let best = report.fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        summary.row(&[&generation, &best, &mean(&report.fitness), &median(&report.fitness)])?;

        if log_delta {
            for (agent, fitness, curve) in generation_deltas(cfg, &report, seed)? {
                deltas.row(&[&generation, &agent, &fitness, &curve.0, &curve.1])?;
            }
        }
        if let Some(log) = &report.lifetime.sensor_log {
            if generation == 0 {
                write_sensor_log(&dir.join(SENSORS_GEN0), log)?;
            }
            if last {
                write_sensor_log(&dir.join(SENSORS_FINAL), log)?;
            }
        }
        if last {
            if let Some(traces) = &report.lifetime.traces {
                write_traces(&dir.join(TRACES_FILE), traces)?;
            }
            PopulationRecord::new(generation, report.genomes.clone(), report.fitness.clone())
                .save(&dir.join(FINAL_POPULATION))?;
        }

        let next = evolution.generation();
        if next % cfg.checkpoint_interval == 0 || next == generations {
            records.flush()?;
            summary.flush()?;
            deltas.flush()?;
            Checkpoint::capture(cfg, seed_record, &evolution).save(&checkpoint_path(dir, next))?;
        }
    }
    records.finish()?;
    summary.finish()?;
    deltas.finish()
}

/// `(agent, fitness, (c_beta_crit, delta))` for the fittest agents of one
/// generation, each clamped to its own sensor readings from that lifetime.
fn generation_deltas(
    cfg: &ExperimentConfig,
    report: &GenerationReport,
    seed: Seed,
) -> Result<Vec<(usize, f64, (f64, f64))>> {
    let log = report.lifetime.sensor_log.as_ref().expect("sensors recorded for delta generations");
    let provenance =
        if report.generation == 0 { SensorProvenance::Generation0 } else { SensorProvenance::FinalGeneration };
    let mut order = argsort_desc(&report.fitness);
    if cfg.evolution.delta_top_k > 0 {
        order.truncate(cfg.evolution.delta_top_k);
    }
    let crit = &cfg.criticality;
    let gen_seed = seed.child(streams::CRITICALITY).child(report.generation as u64);
    order
        .into_par_iter()
        .map(|agent| {
            let data = SensorDataset::from_readings(&log.per_agent[agent], provenance)?;
            let curve = heat_capacity_curve(
                &report.genomes[agent],
                &crit.grid,
                SensorMode::Clamped(&data),
                &crit.schedule,
                gen_seed.child(agent as u64),
            )?;
            Ok((agent, report.fitness[agent], (curve.c_beta_crit, curve.delta)))
        })
        .collect()
}
