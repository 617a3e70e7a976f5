//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use critevo::ising::{GenomeInit, IsingGenome, Layout};
use critevo::rng::Seed;

/// `-sum_{i,j} A_ij J_ij s_i s_j`, straight from the matrices.
pub fn naive_energy(g: &IsingGenome, s: &[f64]) -> f64 {
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

/// Spin vector for enumeration index `code`: bit `k` set means free spin
/// `k` is up.
pub fn spins_for(g: &IsingGenome, sensors: &[f64], code: usize) -> Vec<f64> {
    let mut s = vec![0.0; g.n()];
    for (&i, &v) in g.sensor_indices().iter().zip(sensors) {
        s[i] = v;
    }
    for (k, &i) in g.free_indices().iter().enumerate() {
        s[i] = if code >> k & 1 == 1 { 1.0 } else { -1.0 };
    }
    s
}

/// Index of a spin vector in the enumeration used by [`spins_for`].
pub fn code_of(g: &IsingGenome, s: &[f64]) -> usize {
    g.free_indices().iter().enumerate().map(|(k, &i)| if s[i] > 0.0 { 1 << k } else { 0 }).sum()
}

/// Exact Boltzmann weights of every free-spin configuration at `beta`.
pub fn boltzmann(g: &IsingGenome, sensors: &[f64], beta: f64) -> Vec<f64> {
    let nf = g.free_indices().len();
    let energies: Vec<f64> = (0..1usize << nf).map(|c| naive_energy(g, &spins_for(g, sensors, c))).collect();
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Exact mean and variance of the energy at `beta`.
pub fn exact_moments(g: &IsingGenome, sensors: &[f64], beta: f64) -> (f64, f64) {
    let p = boltzmann(g, sensors, beta);
    let e: Vec<f64> = (0..p.len()).map(|c| naive_energy(g, &spins_for(g, sensors, c))).collect();
    let m: f64 = p.iter().zip(&e).map(|(p, e)| p * e).sum();
    let v: f64 = p.iter().zip(&e).map(|(p, e)| p * (e - m).powi(2)).sum();
    (m, v)
}

/// Default 12-neuron genome with weights in `U(-1, 1)`.
pub fn genome12(seed: u64, beta: f64) -> IsingGenome {
    IsingGenome::random(Layout::default(), beta, &GenomeInit::default(), &mut Seed::new(seed).rng())
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
