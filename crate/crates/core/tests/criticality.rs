mod common;

use common::*;
use critevo::criticality::*;
use critevo::ising::IsingGenome;
use critevo::rng::Seed;
use critevo::stats::log_grid;

fn long_block(sweeps: usize) -> AnnealingSchedule {
    AnnealingSchedule { measurement_sweeps: sweeps, sensor_refresh: sweeps, ..Default::default() }
}

/// Exact heat capacity with every neuron, sensors included, as a spin.
fn exact_thermalized(g: &IsingGenome, c_beta: f64) -> f64 {
    let n = g.n();
    let energies: Vec<f64> = (0..1usize << n)
        .map(|code| {
            let s: Vec<f64> = (0..n).map(|i| if code >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            naive_energy(g, &s)
        })
        .collect();
    let b = c_beta * g.beta();
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-b * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let m: f64 = w.iter().zip(&energies).map(|(w, e)| w * e).sum::<f64>() / z;
    let v: f64 = w.iter().zip(&energies).map(|(w, e)| w * (e - m).powi(2)).sum::<f64>() / z;
    b * b * v
}

// A few times colder than the peak (c_crit is 0.4 to 0.7 for these
// genomes) single-spin-flip chains need well over 10^7 sweeps to hop
// between low-energy basins, so the grid covers the peak region only.
#[test]
fn clamped_heat_capacity_matches_enumeration() {
    let grid = log_grid(0.1, 1.0, 10);
    for seed in 0..3 {
        let g = genome12(seed, 1.0);
        let sensors = [0.5, -0.2, 0.8, -0.6];
        let data = SensorDataset::new(4, sensors.to_vec(), SensorProvenance::Uniform).unwrap();
        let curve = heat_capacity_curve(&g, &grid, SensorMode::Clamped(&data), &long_block(4_000_000), Seed::new(seed)).unwrap();
        for (k, &c) in grid.iter().enumerate() {
            let (_, var) = exact_moments(&g, &sensors, c * g.beta());
            let exact = c * c * g.beta() * g.beta() * var;
            let rel = (curve.values[k] - exact).abs() / exact;
            assert!(rel < 0.05, "genome {seed} c {c}: mc {} exact {exact}", curve.values[k]);
        }
    }
}

#[test]
fn thermalized_heat_capacity_matches_enumeration() {
    let g = genome12(7, 1.0);
    let grid = [0.3, 0.6, 1.0];
    let curve = heat_capacity_curve(&g, &grid, SensorMode::Thermalized, &long_block(4_000_000), Seed::new(8)).unwrap();
    for (k, &c) in grid.iter().enumerate() {
        let exact = exact_thermalized(&g, c);
        assert!((curve.values[k] - exact).abs() / exact < 0.05, "c {c}: {} vs {exact}", curve.values[k]);
    }
}

#[test]
fn heat_capacity_depends_on_the_product_of_c_and_beta() {
    let g = genome12(2, 1.0);
    let mut hot = g.clone();
    hot.set_beta(0.1);
    let data = SensorDataset::uniform(4, 20, &mut Seed::new(3).rng());
    let sched = AnnealingSchedule { measurement_sweeps: 400, ..Default::default() };
    let grid = log_grid(0.1, 10.0, 7);
    let scaled: Vec<f64> = grid.iter().map(|c| c * 10.0).collect();
    let a = heat_capacity_curve(&g, &grid, SensorMode::Clamped(&data), &sched, Seed::new(4)).unwrap();
    let b = heat_capacity_curve(&hot, &scaled, SensorMode::Clamped(&data), &sched, Seed::new(4)).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }
    assert!((b.delta - a.delta - 1.0).abs() < 1e-9);
}

#[test]
fn curves_are_reproducible() {
    let g = genome12(5, 1.0);
    let grid = log_grid(0.1, 10.0, 6);
    let sched = AnnealingSchedule { measurement_sweeps: 300, ..Default::default() };
    let a = heat_capacity_curve(&g, &grid, SensorMode::Thermalized, &sched, Seed::new(1)).unwrap();
    let b = heat_capacity_curve(&g, &grid, SensorMode::Thermalized, &sched, Seed::new(1)).unwrap();
    assert_eq!(a, b);
}
