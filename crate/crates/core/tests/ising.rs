mod common;

use common::*;
use critevo::ising::*;
use critevo::rng::Seed;
use proptest::prelude::*;

fn arb_genome() -> impl Strategy<Value = IsingGenome> {
    (any::<u64>(), 0.1f64..2.0, 0.0f64..=1.0, 1usize..6, 0.01f64..20.0).prop_map(|(seed, range, density, hidden, beta)| {
        let init = GenomeInit { weight_range: range, edge_density: density };
        IsingGenome::random(Layout::with_hidden(hidden), beta, &init, &mut Seed::new(seed).rng())
    })
}

fn arb_state(g: &IsingGenome, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = Seed::new(seed).rng();
    let mut s: Vec<f64> = (0..g.n()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    for i in g.sensor_indices() {
        s[i] = rng.random_range(-1.0..=1.0);
    }
    s
}

proptest! {
    #[test]
    fn energy_matches_naive_sum(g in arb_genome(), seed in any::<u64>()) {
        let s = arb_state(&g, seed);
        let net = Network::new(&g);
        prop_assert!((net.energy(&s) - naive_energy(&g, &s)).abs() < 1e-9);
        let via_state = network_energy(&g, &NetworkState::from_spins(s.clone())).unwrap();
        prop_assert!((via_state - naive_energy(&g, &s)).abs() < 1e-9);
    }

    #[test]
    fn delta_energy_is_new_minus_old(g in arb_genome(), seed in any::<u64>()) {
        let s = arb_state(&g, seed);
        let net = Network::new(&g);
        for i in g.free_indices() {
            let mut t = s.clone();
            t[i] = -t[i];
            let direct = naive_energy(&g, &t) - naive_energy(&g, &s);
            prop_assert!((net.delta_energy(&s, i) - direct).abs() < 1e-9);
            let free_fn = delta_energy(&g, &NetworkState::from_spins(s.clone()), i).unwrap();
            prop_assert!((free_fn - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn flip_probability_is_complementary(de in -50.0f64..50.0, beta in 0.0f64..50.0) {
        let p = flip_probability(de, beta);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + flip_probability(-de, beta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweeps_never_touch_sensors(g in arb_genome(), seed in any::<u64>()) {
        let mut s = arb_state(&g, seed);
        let before: Vec<f64> = g.sensor_indices().iter().map(|&i| s[i]).collect();
        let mut net = Network::new(&g);
        net.thermalize(&mut s, 5, &mut Seed::new(seed ^ 1).rng());
        let after: Vec<f64> = g.sensor_indices().iter().map(|&i| s[i]).collect();
        prop_assert_eq!(before, after);
        prop_assert!(g.free_indices().iter().all(|&i| s[i].abs() == 1.0));
    }

    #[test]
    fn json_round_trip(g in arb_genome()) {
        prop_assert_eq!(IsingGenome::from_json(&g.to_json().unwrap()).unwrap(), g);
    }
}

#[test]
fn flip_probability_limits() {
    assert_eq!(flip_probability(0.0, 3.0), 0.5);
    assert_eq!(flip_probability(1e6, 1.0), 0.0);
    assert_eq!(flip_probability(-1e6, 1.0), 1.0);
}

#[test]
fn delta_energy_rejects_sensor_flip() {
    let g = genome12(3, 1.0);
    let s = NetworkState::from_spins(vec![1.0; 12]);
    assert!(delta_energy(&g, &s, g.sensor_indices()[0]).is_err());
    assert!(delta_energy(&g, &s, 99).is_err());
}

/// Sweep-sampled distribution of the eight free spins against the exact
/// Boltzmann distribution, with sensors held at fixed real values.
#[test]
fn sweeps_sample_the_boltzmann_distribution() {
    let g = genome12(11, 1.0);
    let sensors = [0.3, -0.7, 0.9, -0.1];
    let exact = boltzmann(&g, &sensors, 1.0);
    let mut s = spins_for(&g, &sensors, 0);
    let mut net = Network::new(&g);
    let mut rng = Seed::new(12).rng();
    net.thermalize(&mut s, 1000, &mut rng);
    let sweeps = 200_000;
    let mut counts = vec![0.0; exact.len()];
    for _ in 0..sweeps {
        net.sweep(&mut s, &mut rng);
        counts[code_of(&g, &s)] += 1.0;
    }
    let empirical: Vec<f64> = counts.iter().map(|c| c / sweeps as f64).collect();
    let tv = total_variation(&empirical, &exact);
    println!("tv {tv}");
    assert!(tv < 0.03, "total variation {tv}");
}
