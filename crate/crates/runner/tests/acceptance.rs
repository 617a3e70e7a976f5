//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line to
//! stderr, which bypasses the test harness capture, before asserting.
//!
//! The whole target takes roughly a quarter of an hour on one core in
//! release mode and longer in debug builds.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use critevo::analysis::{decay_exponent, default_perturbation_grid, gamma_from_series, mann_whitney_u, Alternative};
use critevo::criticality::{heat_capacity_curve, AnnealingSchedule, SensorDataset, SensorMode, SensorProvenance};
use critevo::ising::{GenomeInit, IsingGenome, Layout, Network};
use critevo::lineage::LineageTag;
use critevo::rng::Seed;
use critevo::stats::{log_grid, mean, median};
use critevo_runner::evolve::{GENERATIONS_FILE, GENERATION_COLUMNS, SUMMARY_COLUMNS, SUMMARY_FILE};
use critevo_runner::experiments::{
    read_column, BENCHMARK_SUMMARY_COLUMNS, CRITICALITY_DELTA_COLUMNS, SCALING_PEAK_COLUMNS,
};
use critevo_runner::table::read_rows;
use critevo_runner::{run_experiment, ExperimentConfig, ExperimentKind, RunOptions};

fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("\n{verdict} {criterion}: {detail}\n");
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn recipe(file: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(file);
    ExperimentConfig::load(&path).unwrap()
}

fn run(cfg: &ExperimentConfig, out: &Path) -> Vec<PathBuf> {
    run_experiment(cfg, out, RunOptions::default()).unwrap()
}

// ---------------------------------------------------------------------------
// exact enumeration

fn genome12(seed: u64) -> IsingGenome {
    IsingGenome::random(Layout::default(), 1.0, &GenomeInit::default(), &mut Seed::new(seed).rng())
}

fn energy(g: &IsingGenome, s: &[f64]) -> f64 {
    let n = g.n();
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            if g.edge(i, j) {
                e -= g.weight(i, j) * s[i] * s[j];
            }
        }
    }
    e
}

/// Spin vector with the sensors fixed and free spin `k` up when bit `k` of
/// `code` is set.
fn configuration(g: &IsingGenome, sensors: &[f64], code: usize) -> Vec<f64> {
    let mut s = vec![0.0; g.n()];
    for (&i, &v) in g.sensor_indices().iter().zip(sensors) {
        s[i] = v;
    }
    for (k, &i) in g.free_indices().iter().enumerate() {
        s[i] = if code >> k & 1 == 1 { 1.0 } else { -1.0 };
    }
    s
}

fn code_of(g: &IsingGenome, s: &[f64]) -> usize {
    g.free_indices().iter().enumerate().map(|(k, &i)| if s[i] > 0.0 { 1 << k } else { 0 }).sum()
}

/// Boltzmann weights and energies of all free-spin configurations.
fn enumerate(g: &IsingGenome, sensors: &[f64], beta: f64) -> (Vec<f64>, Vec<f64>) {
    let n_free = g.free_indices().len();
    let e: Vec<f64> = (0..1usize << n_free).map(|c| energy(g, &configuration(g, sensors, c))).collect();
    let e0 = e.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = e.iter().map(|x| (-beta * (x - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    (w.into_iter().map(|x| x / z).collect(), e)
}

#[test]
fn boltzmann_stationarity() {
    let g = genome12(3);
    let sensors = [0.4, -0.9, 0.1, 0.7];
    let (exact, _) = enumerate(&g, &sensors, g.beta());
    assert_eq!(exact.len(), 256);
    let mut net = Network::new(&g);
    let mut rng = Seed::new(4).rng();
    let mut s = configuration(&g, &sensors, 0);
    net.thermalize(&mut s, 1000, &mut rng);
    let sweeps = 1_000_000;
    let mut counts = vec![0u64; exact.len()];
    for _ in 0..sweeps {
        net.sweep(&mut s, &mut rng);
        counts[code_of(&g, &s)] += 1;
    }
    let tv: f64 = 0.5 * counts.iter().zip(&exact).map(|(&c, p)| (c as f64 / sweeps as f64 - p).abs()).sum::<f64>();
    let pass = tv <= 0.02;
    report("boltzmann stationarity", pass, &format!("total variation {tv:.4} after {sweeps} sweeps (limit 0.02)"));
    assert!(pass);
}

#[test]
fn heat_capacity_oracle() {
    let grid = log_grid(0.1, 1.0, 10);
    let schedule = AnnealingSchedule { measurement_sweeps: 4_000_000, sensor_refresh: 4_000_000, ..Default::default() };
    let sensors = [0.5, -0.2, 0.8, -0.6];
    let data = SensorDataset::new(4, sensors.to_vec(), SensorProvenance::Uniform).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let g = genome12(seed);
        let curve = heat_capacity_curve(&g, &grid, SensorMode::Clamped(&data), &schedule, Seed::new(seed)).unwrap();
        for (k, &c) in grid.iter().enumerate() {
            let b = c * g.beta();
            let (p, e) = enumerate(&g, &sensors, b);
            let m: f64 = p.iter().zip(&e).map(|(p, e)| p * e).sum();
            let var: f64 = p.iter().zip(&e).map(|(p, e)| p * (e - m).powi(2)).sum();
            let exact = b * b * var;
            worst = worst.max((curve.values[k] - exact).abs() / exact);
        }
    }
    let pass = worst < 0.05;
    report("heat-capacity oracle", pass, &format!("worst relative error {worst:.4} over 3 genomes x 10 points (limit 0.05)"));
    assert!(pass);
}

#[test]
fn unevolved_delta_follows_initial_beta() {
    let out = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for (file, target) in [("criticality_beta01.toml", 1.0), ("criticality_beta1.toml", 0.0), ("criticality_beta10.toml", -1.0)] {
        let cfg = recipe(file);
        assert_eq!(cfg.criticality.n_genomes, 50);
        let dir = &run(&cfg, out.path())[0];
        let deltas: Vec<f64> = read_column(&dir.join("delta.csv"), &CRITICALITY_DELTA_COLUMNS, 2).unwrap();
        assert_eq!(deltas.len(), 50);
        let m = mean(&deltas);
        ok &= (m - target).abs() <= 0.3;
        detail.push(format!("beta_init {} mean delta {m:.3} (target {target:+})", cfg.genome.beta_init));
    }
    report("delta of unevolved genomes", ok, &detail.join(", "));
    assert!(ok);
}

#[test]
fn heat_capacity_peaks_grow_with_size() {
    let out = tempfile::tempdir().unwrap();
    let cfg = recipe("scaling.toml");
    assert_eq!(cfg.scaling.ensemble_size, 20);
    let dir = &run(&cfg, out.path())[0];
    let rows = read_rows(&dir.join("scaling_peaks.csv"), &SCALING_PEAK_COLUMNS).unwrap();
    let mut peaks: Vec<(usize, f64, f64)> = Vec::new();
    for n in &cfg.scaling.sizes {
        let of_size: Vec<_> = rows.iter().filter(|r| r[0] == *n.to_string()).collect();
        assert_eq!(of_size.len(), 20);
        let values: Vec<f64> = of_size.iter().map(|r| r[2].parse().unwrap()).collect();
        let betas: Vec<f64> = of_size.iter().map(|r| r[3].parse().unwrap()).collect();
        peaks.push((*n, median(&values), median(&betas)));
    }
    let increasing = peaks.windows(2).all(|w| w[1].1 > w[0].1);
    let located = peaks.iter().all(|p| (1.0..=2.5).contains(&p.2));
    let detail: Vec<String> =
        peaks.iter().map(|(n, v, b)| format!("N={n} median peak {v:.3} at beta {b:.3}")).collect();
    report("scaling of heat-capacity peaks", increasing && located, &detail.join(", "));
    assert!(increasing && located);
}

/// Per-generation median fitness of one replicate, from its summary log.
fn median_trajectory(dir: &Path) -> Vec<f64> {
    read_column(&dir.join(SUMMARY_FILE), &SUMMARY_COLUMNS, 3).unwrap()
}

/// Count of each lineage tag for every logged generation.
fn composition(dir: &Path) -> BTreeMap<usize, HashMap<LineageTag, usize>> {
    let mut out: BTreeMap<usize, HashMap<LineageTag, usize>> = BTreeMap::new();
    for row in read_rows(&dir.join(GENERATIONS_FILE), &GENERATION_COLUMNS).unwrap() {
        let tag = row[3].parse().unwrap();
        *out.entry(row[0].parse().unwrap()).or_default().entry(tag).or_default() += 1;
    }
    out
}

#[test]
fn evolution_smoke_and_ga_composition() {
    let out = tempfile::tempdir().unwrap();
    let cfg = recipe("desk_smoke.toml");
    assert_eq!((cfg.world.lifespan, cfg.generations().unwrap(), cfg.n_replicates), (500, 300, 5));
    let dirs = run(&cfg, out.path());

    let mut improved = 0;
    let mut detail = Vec::new();
    let mut composition_ok = true;
    for dir in &dirs {
        let medians = median_trajectory(dir);
        assert_eq!(medians.len(), 300);
        let (first, last) = (medians[0], medians[299]);
        if last > 2.0 && last > first {
            improved += 1;
        }
        detail.push(format!("{first:.2}->{last:.2}"));

        let counts = composition(dir);
        composition_ok &= counts.len() == 300;
        for (g, c) in counts {
            let expected: HashMap<LineageTag, usize> = if g == 0 {
                [(LineageTag::Init, 50)].into()
            } else {
                [(LineageTag::Copy, 20), (LineageTag::Mutate, 15), (LineageTag::Mate, 15)].into()
            };
            composition_ok &= c == expected;
        }
    }
    let pass = improved >= 4;
    report("evolution smoke", pass, &format!("{improved}/5 replicates improved past 2 (median {})", detail.join(", ")));
    report("GA composition", composition_ok, "20 copies, 15 mutants, 15 offspring in every logged generation");
    assert!(pass && composition_ok);
}

#[test]
fn subcritical_populations_stay_at_the_initial_energy() {
    let out = tempfile::tempdir().unwrap();
    let cfg = recipe("desk_trap.toml");
    assert_eq!((cfg.genome.beta_init, cfg.generations().unwrap(), cfg.n_replicates), (10.0, 300, 5));
    let dirs = run(&cfg, out.path());
    let mut trapped = 0;
    let mut detail = Vec::new();
    for dir in &dirs {
        let medians = median_trajectory(dir);
        assert_eq!(medians.len(), 300);
        let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo >= 1.95 && hi <= 2.05 {
            trapped += 1;
        }
        detail.push(format!("[{lo:.3}, {hi:.3}]"));
    }
    let pass = trapped >= 3;
    report("subcritical trap", pass, &format!("{trapped}/5 replicates held the median in [1.95, 2.05]: {}", detail.join(" ")));
    assert!(pass);
}

#[test]
fn benchmark_directions() {
    let out = tempfile::tempdir().unwrap();
    let cfg = recipe("benchmark.toml");
    assert_eq!((cfg.benchmark.dim, cfg.benchmark.n_runs), (50, 25));
    let dir = &run(&cfg, out.path())[0];
    let rows = read_rows(&dir.join("benchmark_summary.csv"), &BENCHMARK_SUMMARY_COLUMNS).unwrap();
    let get = |function: &str, algorithm: &str, col: usize| -> f64 {
        let row = rows.iter().find(|r| &r[0] == function && &r[1] == algorithm).unwrap();
        row[col].parse().unwrap()
    };
    let (es_sphere, ga_sphere) = (get("sphere", "es", 4), get("sphere", "ga", 4));
    let sphere = es_sphere < ga_sphere;
    let (ga_rast, es_rast) = (get("rastrigin", "ga", 5), get("rastrigin", "es", 5));
    let rastrigin = ga_rast < es_rast;
    let (ga_rosen, es_rosen) = (get("rosenbrock", "ga", 5), get("rosenbrock", "es", 5));
    let rosenbrock = ga_rosen > 0.0 && es_rosen > 0.0;
    report("benchmark sphere", sphere, &format!("median generations to 1e-2: ES {es_sphere} vs GA {ga_sphere}"));
    report("benchmark rastrigin", rastrigin, &format!("median final loss: GA {ga_rast:.4} vs ES {es_rast:.4}"));
    report("benchmark rosenbrock", rosenbrock, &format!("median final loss: GA {ga_rosen:.4}, ES {es_rosen:.4}"));
    assert!(sphere && rastrigin && rosenbrock);
}

#[test]
fn analysis_oracles() {
    let line = |t: usize| (0..=t).map(|k| 0.7 * k as f64).collect::<Vec<_>>();
    let gamma = gamma_from_series(&line(2000), &line(50_000)).unwrap().gamma;
    let gamma_ok = gamma == 1.0;
    report("generalizability of a linear trace", gamma_ok, &format!("gamma {gamma}"));

    let grid = default_perturbation_grid();
    let mut fits = Vec::new();
    for planted in [-2.26, -5.03] {
        let y: Vec<f64> = grid.iter().map(|f| 8.0 * (planted * f).exp()).collect();
        fits.push((planted, decay_exponent(&grid, &y, 0.0).unwrap().exponent));
    }
    let decay_ok = fits.iter().all(|(p, f)| (p - f).abs() <= 0.01);
    let detail: Vec<String> = fits.iter().map(|(p, f)| format!("{p} -> {f:.4}")).collect();
    report("planted decay exponents", decay_ok, &detail.join(", "));

    let mw = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Alternative::Less).unwrap();
    let mw_ok = mw.exact && (mw.p - 0.05).abs() < 1e-12;
    report("exact Mann-Whitney p", mw_ok, &format!("U {} p {} exact {}", mw.u, mw.p, mw.exact));
    assert!(gamma_ok && decay_ok && mw_ok);
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn reruns_are_byte_identical() {
    let quick = AnnealingSchedule {
        start_scale: 10.0,
        n_stages: 4,
        sweeps_per_stage: 10,
        burn_in: 10,
        measurement_sweeps: 100,
        sensor_refresh: 20,
    };
    let mut configs = Vec::new();
    for kind in [ExperimentKind::EvolveGa, ExperimentKind::EvolveEs] {
        let mut cfg = recipe("desk_smoke.toml");
        cfg.experiment = kind;
        cfg.name = Some(format!("determinism_{kind}"));
        cfg.es = Some(critevo::es::EsConfig::new(0.1, 0.1));
        cfg.n_replicates = 2;
        cfg.world.lifespan = 100;
        cfg.evolution.generations = Some(6);
        cfg.evolution.delta_every = 3;
        cfg.evolution.delta_top_k = 3;
        cfg.evolution.record_traces = true;
        cfg.checkpoint_interval = 2;
        cfg.criticality.schedule = quick.clone();
        configs.push(cfg);
    }
    let mut scan = recipe("criticality_beta1.toml");
    scan.criticality.n_genomes = 5;
    scan.world.lifespan = 100;
    scan.criticality.schedule = quick.clone();
    configs.push(scan);
    let mut bench = recipe("benchmark.toml");
    bench.benchmark.n_runs = 3;
    bench.benchmark.generations = Some(20);
    configs.push(bench);

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for cfg in &configs {
        run(cfg, a.path());
        pool.install(|| run(cfg, b.path()));
    }
    let (first, second) = (snapshot(a.path()), snapshot(b.path()));
    let differing: Vec<String> = first
        .iter()
        .filter(|(path, bytes)| second.get(*path) != Some(*bytes))
        .map(|(path, _)| path.display().to_string())
        .collect();
    let pass = !first.is_empty() && first.len() == second.len() && differing.is_empty();
    report("determinism", pass, &format!("{} CSV files compared, {} differ", first.len(), differing.len()));
    assert!(pass, "differing files: {differing:?}");
}
