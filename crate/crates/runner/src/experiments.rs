//! Every experiment kind behind one entry point.

use std::path::{Path, PathBuf};

use critevo::analysis::{decay_exponent, generalizability, mann_whitney_u, perturbation_sweep, Alternative, MannWhitney};
use critevo::benchmarks::run_comparison;
use critevo::criticality::{
    heat_capacity_curve, mean_curve, scaling_analysis, HeatCapacityCurve, SensorDataset, SensorMode, SensorProvenance,
};
use critevo::ising::IsingGenome;
use critevo::rng::{streams, Seed};
use critevo::stats::median;
use critevo::world::{run_lifetime, LifetimeOptions, WorldConfig};
use rayon::prelude::*;

use crate::artifacts::{
    prepare_run_dir, read_pooled_sensors, read_sensor_log, write_sensor_log, write_traces, Checkpoint, CompletedRun, RunOptions,
    SeedRecord, SENSORS_FINAL, SENSORS_GEN0,
};
use crate::config::{DeltaSensors, ExperimentConfig, ExperimentKind, ModeChoice};
use crate::error::{IoContext, Result, RunnerError};
use crate::evolve::{run_evolution, SUMMARY_COLUMNS, SUMMARY_FILE};
use crate::table::{parse, read_rows, Table};

/// Directory of one replicate of an evolution experiment.
pub fn replicate_dir(experiment_dir: &Path, name: &str, replicate: usize) -> PathBuf {
    experiment_dir.join(format!("{name}-r{replicate:02}"))
}

/// Validates `cfg`, then runs it under `out_root/<experiment>/`. Returns the
/// directories written, in replicate order.
pub fn run_experiment(cfg: &ExperimentConfig, out_root: &Path, options: RunOptions) -> Result<Vec<PathBuf>> {
    let cfg = cfg.clone().resolve();
    cfg.validate()?;
    let experiment_dir = out_root.join(cfg.experiment.as_str());
    let name = cfg.name().to_string();
    if cfg.experiment.is_evolution() {
        let dirs: Vec<PathBuf> = (0..cfg.n_replicates).map(|r| replicate_dir(&experiment_dir, &name, r)).collect();
        dirs.par_iter().enumerate().map(|(r, dir)| run_evolution(&cfg, r, dir, options)).collect::<Result<()>>()?;
        return Ok(dirs);
    }
    let dir = experiment_dir.join(&name);
    prepare_run_dir(&dir, &cfg, SeedRecord::new(cfg.seed, 0), options)?;
    let seed = Seed::new(cfg.seed);
    match cfg.experiment {
        ExperimentKind::CriticalityScan | ExperimentKind::SensorModes => criticality(&cfg, &dir, seed)?,
        ExperimentKind::Scaling => scaling(&cfg, &dir, seed)?,
        ExperimentKind::Generalize => generalize(&cfg, &dir, seed)?,
        ExperimentKind::Perturb => perturb(&cfg, &dir, seed)?,
        ExperimentKind::Benchmark => benchmark(&cfg, &dir, seed)?,
        ExperimentKind::ThermalizationSweep => thermalization(&cfg, &dir, options)?,
        ExperimentKind::DeltaDistribution => delta_distribution(&cfg, &dir, seed)?,
        ExperimentKind::EvolveGa | ExperimentKind::EvolveEs => unreachable!("handled above"),
    }
    Ok(vec![dir])
}

// ---------------------------------------------------------------------------
// criticality

pub const CURVE_COLUMNS: [&str; 3] = ["genome_id", "c_beta", "C_H"];
pub const CRITICALITY_DELTA_COLUMNS: [&str; 4] = ["genome_id", "c_beta_crit", "delta", "sensor_mode"];
pub const MEAN_CURVE_COLUMNS: [&str; 3] = ["sensor_mode", "c_beta", "mean_C_H"];

fn mode_label(mode: ModeChoice) -> u64 {
    match mode {
        ModeChoice::Thermalized => 1,
        ModeChoice::Generation0 => 2,
        ModeChoice::Final => 3,
        ModeChoice::Uniform => 4,
    }
}

/// Sensor data for each genome: shared by all of them or one set each.
enum Sensors {
    Shared(SensorDataset),
    PerGenome(Vec<SensorDataset>),
}

impl Sensors {
    fn get(&self, i: usize) -> &SensorDataset {
        match self {
            Sensors::Shared(d) => d,
            Sensors::PerGenome(v) => &v[i],
        }
    }
}

/// Genomes to scan and their sensor data per mode. A stored run contributes
/// its final evaluated population, each agent's own final readings, and the
/// pooled readings of generation 0 (those came from different agents). Fresh
/// random genomes live one lifetime to produce their generation-0 readings.
fn criticality_inputs(cfg: &ExperimentConfig, seed: Seed) -> Result<(Vec<IsingGenome>, Vec<(ModeChoice, Option<Sensors>)>)> {
    let crit = &cfg.criticality;
    let modes = cfg.modes().to_vec();
    let (genomes, gen0, final_data) = match &crit.run {
        Some(run_dir) => {
            let run = CompletedRun::open(run_dir)?;
            let gen0 = if modes.contains(&ModeChoice::Generation0) {
                Some(Sensors::Shared(read_pooled_sensors(&run_dir.join(SENSORS_GEN0), SensorProvenance::Generation0)?))
            } else {
                None
            };
            let final_data = if modes.contains(&ModeChoice::Final) {
                let per_agent = read_sensor_log(&run_dir.join(SENSORS_FINAL), SensorProvenance::FinalGeneration)?;
                if per_agent.len() != run.population.genomes.len() {
                    return Err(RunnerError::artifact(run_dir, "final sensor log and population differ in size"));
                }
                Some(Sensors::PerGenome(per_agent))
            } else {
                None
            };
            (run.population.genomes, gen0, final_data)
        }
        None => {
            let g = &cfg.genome;
            let mut rng = seed.child(streams::INIT).rng();
            let genomes: Vec<IsingGenome> = (0..crit.n_genomes)
                .map(|_| IsingGenome::random(g.layout(), g.beta_init, &g.init, &mut rng))
                .collect();
            let gen0 = if modes.contains(&ModeChoice::Generation0) {
                let world = WorldConfig { n_agents: genomes.len(), ..cfg.world.clone() };
                let options = LifetimeOptions { record_sensors: true, record_traces: false };
                let log = run_lifetime(&genomes, &world, seed.child(streams::WORLD), options)?
                    .sensor_log
                    .expect("sensors requested");
                let per_agent = log
                    .per_agent
                    .iter()
                    .map(|r| SensorDataset::from_readings(r, SensorProvenance::Generation0))
                    .collect::<critevo::Result<Vec<_>>>()?;
                Some(Sensors::PerGenome(per_agent))
            } else {
                None
            };
            (genomes, gen0, None)
        }
    };
    let (mut gen0, mut final_data) = (gen0, final_data);
    let per_mode = modes
        .into_iter()
        .map(|m| {
            let sensors = match m {
                ModeChoice::Thermalized => None,
                ModeChoice::Generation0 => gen0.take(),
                ModeChoice::Final => final_data.take(),
                ModeChoice::Uniform => Some(Sensors::PerGenome(
                    genomes
                        .iter()
                        .enumerate()
                        .map(|(i, g)| {
                            let mut rng = seed.child(streams::INIT).child(i as u64).rng();
                            SensorDataset::uniform(g.sensor_indices().len(), crit.uniform_rows, &mut rng)
                        })
                        .collect(),
                )),
            };
            (m, sensors)
        })
        .collect();
    Ok((genomes, per_mode))
}

fn criticality(cfg: &ExperimentConfig, dir: &Path, seed: Seed) -> Result<()> {
    let crit = &cfg.criticality;
    let (genomes, per_mode) = criticality_inputs(cfg, seed)?;
    let mut deltas = Table::create(&dir.join("delta.csv"), &CRITICALITY_DELTA_COLUMNS)?;
    let mut means = Table::create(&dir.join("curve_mean.csv"), &MEAN_CURVE_COLUMNS)?;
    for (mode, sensors) in &per_mode {
        let mode_seed = seed.child(streams::CRITICALITY).child(mode_label(*mode));
        let curves = genomes
            .par_iter()
            .enumerate()
            .map(|(i, g)| {
                let m = match sensors {
                    Some(s) => SensorMode::Clamped(s.get(i)),
                    None => SensorMode::Thermalized,
                };
                heat_capacity_curve(g, &crit.grid, m, &crit.schedule, mode_seed.child(i as u64))
            })
            .collect::<critevo::Result<Vec<HeatCapacityCurve>>>()?;
        let mut table = Table::create(&dir.join(format!("curve_{}.csv", mode.as_str())), &CURVE_COLUMNS)?;
        for (i, curve) in curves.iter().enumerate() {
            for (c, v) in curve.grid.iter().zip(&curve.values) {
                table.row(&[&i, c, v])?;
            }
            deltas.row(&[&i, &curve.c_beta_crit, &curve.delta, &mode.as_str()])?;
        }
        table.finish()?;
        for (c, v) in crit.grid.iter().zip(mean_curve(&curves)) {
            means.row(&[&mode.as_str(), c, &v])?;
        }
    }
    means.finish()?;
    deltas.finish()
}

// ---------------------------------------------------------------------------
// scaling

pub const SCALING_COLUMNS: [&str; 4] = ["n", "genome_id", "c_beta", "C_H"];
pub const SCALING_PEAK_COLUMNS: [&str; 4] = ["n", "genome_id", "peak_C_H", "peak_beta"];
pub const SCALING_MEDIAN_COLUMNS: [&str; 3] = ["n", "c_beta", "median_C_H"];

fn scaling(cfg: &ExperimentConfig, dir: &Path, seed: Seed) -> Result<()> {
    let s = &cfg.scaling;
    let summaries = scaling_analysis(&s.sizes, s.ensemble_size, &cfg.scaling_config(), seed)?;
    let mut curves = Table::create(&dir.join("scaling.csv"), &SCALING_COLUMNS)?;
    let mut peaks = Table::create(&dir.join("scaling_peaks.csv"), &SCALING_PEAK_COLUMNS)?;
    let mut medians = Table::create(&dir.join("scaling_median.csv"), &SCALING_MEDIAN_COLUMNS)?;
    for size in &summaries {
        for (i, curve) in size.curves.iter().enumerate() {
            for (c, v) in curve.grid.iter().zip(&curve.values) {
                curves.row(&[&size.n, &i, c, v])?;
            }
            peaks.row(&[&size.n, &i, &size.peak_values[i], &size.peak_betas[i]])?;
        }
        for (c, v) in s.grid.iter().zip(&size.median_curve) {
            medians.row(&[&size.n, c, v])?;
        }
    }
    curves.finish()?;
    peaks.finish()?;
    medians.finish()
}

// ---------------------------------------------------------------------------
// generalizability and perturbation

pub const GAMMA_COLUMNS: [&str; 8] =
    ["population_id", "run", "t_train", "t_extend", "mean_energy_train", "mean_energy_extend", "gamma", "cluster"];
pub const PERTURB_COLUMNS: [&str; 4] = ["population_id", "f_pert", "repeat", "mean_fitness"];
pub const PERTURB_FIT_COLUMNS: [&str; 5] = ["population_id", "run", "alpha_fit", "intercept", "n_excluded"];

/// Convenience label: `gamma < 0.5` is cluster 1.
pub fn gamma_cluster(gamma: f64) -> u8 {
    if gamma < 0.5 {
        1
    } else {
        2
    }
}

fn open_runs(dirs: &[PathBuf]) -> Result<Vec<CompletedRun>> {
    dirs.iter().map(|d| CompletedRun::open(d)).collect()
}

fn generalize(cfg: &ExperimentConfig, dir: &Path, seed: Seed) -> Result<()> {
    let g = &cfg.generalize;
    let runs = open_runs(&g.runs)?;
    let results = runs
        .par_iter()
        .enumerate()
        .map(|(p, run)| {
            generalizability(&run.population.genomes, &run.config.world, g.t_train, g.t_extend, seed.child(p as u64))
        })
        .collect::<critevo::Result<Vec<_>>>()?;
    let mut table = Table::create(&dir.join("gamma.csv"), &GAMMA_COLUMNS)?;
    for (p, (run, r)) in runs.iter().zip(&results).enumerate() {
        let path = run.dir.display();
        table.row(&[
            &p,
            &path,
            &r.t_train,
            &r.t_extend,
            &r.mean_energy_train,
            &r.mean_energy_extend,
            &r.gamma,
            &gamma_cluster(r.gamma),
        ])?;
    }
    table.finish()
}

fn perturb(cfg: &ExperimentConfig, dir: &Path, seed: Seed) -> Result<()> {
    let p = &cfg.perturb;
    let runs = open_runs(&p.runs)?;
    let sweeps = runs
        .iter()
        .enumerate()
        .map(|(k, run)| perturbation_sweep(&run.population.genomes, &run.config.world, &p.grid, p.repeats, seed.child(k as u64)))
        .collect::<critevo::Result<Vec<_>>>()?;
    let mut samples = Table::create(&dir.join("perturb.csv"), &PERTURB_COLUMNS)?;
    let mut fits = Table::create(&dir.join("perturb_fit.csv"), &PERTURB_FIT_COLUMNS)?;
    for (k, (run, sweep)) in runs.iter().zip(&sweeps).enumerate() {
        for (f, reps) in sweep.grid.iter().zip(&sweep.samples) {
            for (r, v) in reps.iter().enumerate() {
                samples.row(&[&k, f, &r, v])?;
            }
        }
        // Populations that collapse to the floor leave too few points to fit.
        let (alpha, intercept, excluded) = match decay_exponent(&sweep.grid, &sweep.mean_fitness(), p.fit_baseline) {
            Ok(fit) => (fit.exponent, fit.intercept, fit.excluded.len()),
            Err(_) => (f64::NAN, f64::NAN, sweep.grid.len()),
        };
        fits.row(&[&k, &run.dir.display(), &alpha, &intercept, &excluded])?;
    }
    samples.finish()?;
    fits.finish()
}

// ---------------------------------------------------------------------------
// benchmark

pub const BENCHMARK_COLUMNS: [&str; 6] = ["function", "algorithm", "run", "generation", "raw_loss", "normalized_loss"];
pub const BAND_COLUMNS: [&str; 6] = ["function", "algorithm", "generation", "p25", "p50", "p75"];
pub const BENCHMARK_SUMMARY_COLUMNS: [&str; 6] = [
    "function",
    "algorithm",
    "normalizer",
    "threshold",
    "median_generations_to_threshold",
    "median_final_raw",
];

fn benchmark(cfg: &ExperimentConfig, dir: &Path, seed: Seed) -> Result<()> {
    let bench = cfg.benchmark_config()?;
    let threshold = cfg.benchmark.threshold;
    let mut losses = Table::create(&dir.join("benchmark.csv"), &BENCHMARK_COLUMNS)?;
    let mut bands = Table::create(&dir.join("benchmark_bands.csv"), &BAND_COLUMNS)?;
    let mut summary = Table::create(&dir.join("benchmark_summary.csv"), &BENCHMARK_SUMMARY_COLUMNS)?;
    for &function in &cfg.benchmark.functions {
        for curves in run_comparison(function, &bench, seed)? {
            let (f, a) = (curves.function.as_str(), curves.algorithm.as_str());
            for (r, (raw, norm)) in curves.raw.iter().zip(&curves.normalized).enumerate() {
                for (g, (x, y)) in raw.iter().zip(norm).enumerate() {
                    losses.row(&[&f, &a, &r, &g, x, y])?;
                }
            }
            let b = curves.bands();
            for g in 0..curves.generations() {
                bands.row(&[&f, &a, &g, &b.p25[g], &b.p50[g], &b.p75[g]])?;
            }
            let to = curves.median_generations_to(threshold);
            summary.row(&[&f, &a, &curves.normalizer, &threshold, &to, &median(&curves.final_raw())])?;
        }
    }
    losses.finish()?;
    bands.finish()?;
    summary.finish()
}

// ---------------------------------------------------------------------------
// thermalization sweep

pub const THERMALIZATION_COLUMNS: [&str; 6] =
    ["thermalization_steps", "replicate", "generation", "best", "mean", "median"];

/// One evolution run per (setting, replicate) inside `dir`, then a combined
/// table of their per-generation summaries.
fn thermalization(cfg: &ExperimentConfig, dir: &Path, options: RunOptions) -> Result<()> {
    let jobs: Vec<(usize, usize)> = cfg
        .thermalization
        .values
        .iter()
        .flat_map(|&v| (0..cfg.n_replicates).map(move |r| (v, r)))
        .collect();
    // The sweep directory itself was just prepared; only the runs inside it
    // resume individually.
    let inner = RunOptions { force: false, ..options };
    jobs.par_iter()
        .map(|&(v, r)| {
            let run_cfg = cfg.thermalization_run(v);
            run_evolution(&run_cfg, r, &replicate_dir(dir, run_cfg.name(), r), inner)
        })
        .collect::<Result<()>>()?;
    let mut table = Table::create(&dir.join("thermalization.csv"), &THERMALIZATION_COLUMNS)?;
    for &(v, r) in &jobs {
        let run_cfg = cfg.thermalization_run(v);
        let path = replicate_dir(dir, run_cfg.name(), r).join(SUMMARY_FILE);
        for row in read_rows(&path, &SUMMARY_COLUMNS)? {
            table.row(&[&v, &r, &&row[0], &&row[1], &&row[2], &&row[3]])?;
        }
    }
    table.finish()
}

// ---------------------------------------------------------------------------
// delta distributions

pub const DELTA_DIST_COLUMNS: [&str; 5] = ["task", "run_id", "run", "mean_delta", "n_agents"];
pub const MWU_COLUMNS: [&str; 6] = ["alternative", "n_hard", "n_simple", "U", "p", "exact"];

/// One-sided test that hard-task runs sit further from the ordered side
/// than simple-task runs.
pub fn delta_distribution_test(simple: &[f64], hard: &[f64]) -> Result<MannWhitney> {
    Ok(mann_whitney_u(hard, simple, Alternative::Greater)?)
}

/// Mean `delta` of the `top_k` fittest agents of a finished run.
fn run_top_delta(cfg: &ExperimentConfig, run: &CompletedRun, seed: Seed) -> Result<f64> {
    let d = &cfg.delta_distribution;
    let pop = &run.population;
    if pop.genomes.len() < d.top_k {
        return Err(RunnerError::artifact(
            &run.dir,
            format!("{} agents, fewer than top_k = {}", pop.genomes.len(), d.top_k),
        ));
    }
    let sensors = match d.sensors {
        DeltaSensors::Final => Some(read_sensor_log(&run.dir.join(SENSORS_FINAL), SensorProvenance::FinalGeneration)?),
        DeltaSensors::Thermalized => None,
    };
    let top: Vec<usize> = critevo::stats::argsort_desc(&pop.fitness).into_iter().take(d.top_k).collect();
    let crit = &cfg.criticality;
    let deltas = top
        .par_iter()
        .map(|&i| {
            let mode = match &sensors {
                Some(s) => SensorMode::Clamped(&s[i]),
                None => SensorMode::Thermalized,
            };
            Ok(heat_capacity_curve(&pop.genomes[i], &crit.grid, mode, &crit.schedule, seed.child(i as u64))?.delta)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(critevo::stats::mean(&deltas))
}

fn delta_distribution(cfg: &ExperimentConfig, dir: &Path, seed: Seed) -> Result<()> {
    let d = &cfg.delta_distribution;
    let mut per_task = Vec::new();
    for (t, (task, dirs)) in [("simple", &d.simple), ("hard", &d.hard)].into_iter().enumerate() {
        let runs = open_runs(dirs)?;
        let task_seed = seed.child(streams::CRITICALITY).child(t as u64);
        let means = runs
            .iter()
            .enumerate()
            .map(|(k, run)| run_top_delta(cfg, run, task_seed.child(k as u64)))
            .collect::<Result<Vec<_>>>()?;
        per_task.push((task, runs, means));
    }
    let mut table = Table::create(&dir.join("delta_dist.csv"), &DELTA_DIST_COLUMNS)?;
    for (task, runs, means) in &per_task {
        for (k, (run, m)) in runs.iter().zip(means).enumerate() {
            table.row(&[task, &k, &run.dir.display(), m, &d.top_k])?;
        }
    }
    table.finish()?;
    let test = delta_distribution_test(&per_task[0].2, &per_task[1].2)?;
    let mut mwu = Table::create(&dir.join("mwu.csv"), &MWU_COLUMNS)?;
    mwu.row(&[&"greater", &per_task[1].2.len(), &per_task[0].2.len(), &test.u, &test.p, &test.exact])?;
    mwu.finish()
}

// ---------------------------------------------------------------------------
// replay

pub const FITNESS_COLUMNS: [&str; 2] = ["agent_id", "fitness"];

/// Re-simulates the lifetime that follows a checkpoint, with every log
/// switched on. With the stored lifespan the fitness equals what the run
/// logged for that generation.
pub fn replay(checkpoint: &Path, out: &Path, lifespan: Option<usize>) -> Result<()> {
    let cp = Checkpoint::load(checkpoint)?;
    let evolution = cp.restore()?;
    let (genomes, seed) = evolution.pending();
    let mut world = cp.config.world.clone();
    if let Some(l) = lifespan {
        world.lifespan = l;
    }
    world.validate()?;
    std::fs::create_dir_all(out).at(out)?;
    let outcome = run_lifetime(&genomes, &world, seed, LifetimeOptions::everything())?;
    let mut fitness = Table::create(&out.join("fitness.csv"), &FITNESS_COLUMNS)?;
    for (i, f) in outcome.fitness.iter().enumerate() {
        fitness.row(&[&i, f])?;
    }
    fitness.finish()?;
    if let Some(log) = &outcome.sensor_log {
        write_sensor_log(&out.join("sensors.csv"), log)?;
    }
    if let Some(traces) = &outcome.traces {
        write_traces(&out.join("traces.csv"), traces)?;
    }
    Ok(())
}

/// Parses one numeric column of a stored table.
pub fn read_column<T: std::str::FromStr>(path: &Path, columns: &[&str], col: usize) -> Result<Vec<T>> {
    read_rows(path, columns)?.iter().map(|r| parse(path, r, col)).collect()
}
