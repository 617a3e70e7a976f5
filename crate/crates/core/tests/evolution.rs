mod common;

use common::genome12;
use critevo::es::*;
use critevo::ga::*;
use critevo::ising::{GenomeInit, IsingGenome, Layout};
use critevo::lineage::LineageTag;
use critevo::rng::Seed;
use proptest::prelude::*;

/// Kolmogorov-Smirnov distance between a sample and `U(lo, hi)`.
fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = (x - lo) / (hi - lo);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn resampled_weights_are_uniform() {
    let g = genome12(1, 1.0);
    let cfg = GaConfig::default();
    let mut rng = Seed::new(2).rng();
    let mut fresh = Vec::with_capacity(100_000);
    for _ in 0..100_000 {
        let m = mutate(&g, &mut rng, &cfg);
        let changed: Vec<f64> =
            m.weights().iter().zip(g.weights()).filter(|(a, b)| a != b).map(|(a, _)| *a).collect();
        assert_eq!(changed.len(), 1);
        fresh.push(changed[0]);
    }
    let d = ks_uniform(fresh, -2.0, 2.0);
    assert!(d < 0.01, "KS distance {d}");
}

#[test]
fn beta_noise_has_the_configured_spread() {
    let g = genome12(3, 1.0);
    let cfg = GaConfig::default();
    let mut rng = Seed::new(4).rng();
    let betas: Vec<f64> = (0..20_000).map(|_| mutate(&g, &mut rng, &cfg).beta()).collect();
    let m = critevo::stats::mean(&betas);
    let sd = critevo::stats::variance(&betas).sqrt();
    assert!((m - 1.0).abs() < 0.001, "mean {m}");
    assert!((sd - 0.02).abs() < 0.001, "sd {sd}");
}

fn population(seed: u64, beta: f64) -> Vec<IsingGenome> {
    let mut rng = Seed::new(seed).rng();
    (0..50).map(|_| IsingGenome::random(Layout::default(), beta, &GenomeInit::default(), &mut rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generation_contract(seed in any::<u64>(), fit_seed in any::<u64>()) {
        use rand::Rng;
        let pop = population(seed, 1.0);
        let mut frng = Seed::new(fit_seed).rng();
        let fitness: Vec<f64> = (0..50).map(|_| frng.random_range(0.0..5.0)).collect();
        let cfg = GaConfig::default();
        let (next, tags) = next_generation(&pop, &fitness, &IsingVariation(&cfg), &cfg, &mut Seed::new(seed ^ 9).rng()).unwrap();
        prop_assert_eq!(next.len(), 50);
        let count = |t: LineageTag| tags.iter().filter(|x| **x == t).count();
        prop_assert_eq!((count(LineageTag::Copy), count(LineageTag::Mutate), count(LineageTag::Mate)), (20, 15, 15));
        let ranked = critevo::stats::argsort_desc(&fitness);
        for k in 0..20 {
            prop_assert_eq!(&next[k], &pop[ranked[k]]);
        }
        for g in &next {
            prop_assert!(g.validate().is_ok());
            prop_assert!(g.beta() > 0.0);
        }
    }

    #[test]
    fn mating_is_one_convex_combination(seed in any::<u64>(), w in 0.0f64..=1.0) {
        let pop = population(seed, 1.0);
        let (mut a, mut b) = (pop[0].clone(), pop[1].clone());
        a.set_beta(0.5);
        b.set_beta(3.0);
        let child = mate_with_weight(&a, &b, w, &mut Seed::new(seed).rng()).unwrap();
        for k in 0..a.weights().len() {
            let expected = w * a.weights()[k] + (1.0 - w) * b.weights()[k];
            prop_assert!((child.weights()[k] - expected).abs() < 1e-12);
            let from_a = child.adjacency()[k] == a.adjacency()[k];
            let from_b = child.adjacency()[k] == b.adjacency()[k];
            prop_assert!(from_a || from_b);
        }
        prop_assert!((child.beta() - (w * 0.5 + (1.0 - w) * 3.0)).abs() < 1e-12);
        prop_assert!(child.validate().is_ok());
    }

    #[test]
    fn rank_fitness_is_standardized(raw in prop::collection::vec(-1e6f64..1e6, 2..80)) {
        let f = rank_fitness(&raw).unwrap();
        let m = critevo::stats::mean(&f);
        let v = critevo::stats::variance(&f);
        prop_assert!(m.abs() < 1e-9);
        prop_assert!(v == 0.0 || (v - 1.0).abs() < 1e-9);
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if raw[i] < raw[j] {
                    prop_assert!(f[i] < f[j]);
                }
            }
        }
    }
}

#[test]
fn mating_boundaries() {
    let pop = population(5, 1.0);
    let a = &pop[0];
    let child = mate_with_weight(a, &pop[1], 1.0, &mut Seed::new(0).rng()).unwrap();
    assert_eq!(&child, a);
    let same = mate(a, a, &mut Seed::new(1).rng()).unwrap();
    assert_eq!(&same, a);
}

#[test]
fn sparsity_rate_matches_config() {
    // no stored elites yet, so all 50 slots are fresh draws
    let cfg = EsConfig::new(0.1, 0.1);
    let state = EsState::new(vec![0.0; 100], None);
    let mut rng = Seed::new(6).rng();
    let (mut zeros, mut total) = (0usize, 0usize);
    for _ in 0..20 {
        let batch = sample_population(&state, &cfg, &mut rng);
        for eps in &batch.epsilons {
            zeros += eps.iter().filter(|e| **e == 0.0).count();
            total += eps.len();
        }
    }
    assert_eq!(total, 100_000);
    let rate = zeros as f64 / total as f64;
    assert!((rate - 0.5).abs() < 0.005, "rate {rate}");
}

#[test]
fn zero_rank_signal_jumps_to_the_best() {
    let cfg = EsConfig { alpha: 0.0, ..EsConfig::new(0.1, 0.1) };
    let state = EsState::new(vec![0.5, -0.5], Some(1.0));
    let batch = sample_population(&state, &cfg, &mut Seed::new(7).rng());
    let raw: Vec<f64> = batch.candidates.iter().map(|c| -c.params[0].abs()).collect();
    let next = update_mean(&state, &batch, &raw, &cfg).unwrap();
    let best = &batch.candidates[critevo::stats::argsort_desc(&raw)[0]];
    assert_eq!(next.mean, best.params);
    assert_eq!(next.mean_beta, best.beta);
}

#[test]
fn elites_reappear_unmodified() {
    let cfg = EsConfig::new(0.1, 0.1);
    let mut state = EsState::new(vec![0.0; 5], Some(1.0));
    let mut obj = FnObjective(|c: &Candidate| -c.params.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>());
    let mut rng = Seed::new(8).rng();
    for g in 0..5 {
        let step = run_es_generation(&mut obj, &state, &cfg, g, &mut rng).unwrap();
        let next_batch = sample_population(&step.next, &cfg, &mut Seed::new(100 + g as u64).rng());
        assert_eq!(&next_batch.candidates[..6], &step.next.elites[..]);
        assert!(next_batch.tags[..6].iter().all(|t| *t == LineageTag::Elite));
        state = step.next;
    }
}

#[test]
fn one_dimensional_quadratic_converges() {
    let cfg = EsConfig { bounds: None, ..EsConfig::new(0.1, 0.1) };
    let mut state = EsState::new(vec![1.0], None);
    let mut obj = FnObjective(|c: &Candidate| -c.params[0] * c.params[0]);
    let mut rng = Seed::new(9).rng();
    for g in 0..10_000 {
        state = run_es_generation(&mut obj, &state, &cfg, g, &mut rng).unwrap().next;
    }
    assert!(state.mean[0].abs() <= 0.05, "mean {}", state.mean[0]);
}

#[test]
fn sphere_loss_trends_down() {
    use critevo::benchmarks::{BenchmarkConfig, BenchmarkObjective, Function, run_es};
    let cfg = BenchmarkConfig { n_runs: 1, ..BenchmarkConfig::new(200) };
    let mut gains = Vec::new();
    for s in 0..5 {
        let obj = BenchmarkObjective::random(Function::Sphere, 50, &mut Seed::new(s).rng());
        let curve = run_es(&obj, &cfg, Seed::new(100 + s)).unwrap();
        gains.push(curve[199] / curve[0]);
    }
    assert!(critevo::stats::median(&gains) < 0.5, "{gains:?}");
}
