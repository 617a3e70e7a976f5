use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::genome::{IsingGenome, NeuronClass};
use crate::error::{Error, Result};

/// Beyond this `|beta * delta_e|` the acceptance is saturated to 0 or 1.
const SATURATION: f64 = 700.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    /// Heat-bath acceptance `1 / (1 + exp(beta * delta_e))`.
    #[default]
    Glauber,
    /// `min(1, exp(-beta * delta_e))`.
    Metropolis,
}

/// Which energy difference enters the acceptance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `delta_e = e(flipped) - e(current)`: energy-lowering flips favoured.
    #[default]
    EnergyIncrease,
    /// `delta_e = e(current) - e(flipped)`, the literal displayed form.
    Legacy,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dynamics {
    #[serde(default)]
    pub rule: UpdateRule,
    #[serde(default)]
    pub sign: SignConvention,
}

impl Dynamics {
    /// Probability of accepting a flip whose energy change is `delta_e`
    /// (always `e(flipped) - e(current)`).
    #[inline]
    pub fn acceptance(self, delta_e: f64, beta: f64) -> f64 {
        let d = match self.sign {
            SignConvention::EnergyIncrease => delta_e,
            SignConvention::Legacy => -delta_e,
        };
        match self.rule {
            UpdateRule::Glauber => flip_probability(d, beta),
            UpdateRule::Metropolis => {
                let x = beta * d;
                if x <= 0.0 {
                    1.0
                } else if x > SATURATION {
                    0.0
                } else {
                    (-x).exp()
                }
            }
        }
    }
}

/// Glauber flip probability `1 / (1 + exp(beta * delta_e))`, saturated for
/// large arguments.
#[inline]
pub fn flip_probability(delta_e: f64, beta: f64) -> f64 {
    let x = beta * delta_e;
    if x > SATURATION {
        0.0
    } else if x < -SATURATION {
        1.0
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Per-neuron state: clamped real sensor values, `±1` elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub spins: Vec<f64>,
}

impl NetworkState {
    /// Sensors at zero, every other neuron a fair random spin.
    pub fn random<R: Rng + ?Sized>(genome: &IsingGenome, rng: &mut R) -> Self {
        let spins = genome
            .classes()
            .iter()
            .map(|c| match c {
                NeuronClass::Sensor => 0.0,
                _ => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            })
            .collect();
        NetworkState { spins }
    }

    pub fn from_spins(spins: Vec<f64>) -> Self {
        NetworkState { spins }
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn set_sensors(&mut self, sensors: &[usize], values: &[f64]) {
        debug_assert_eq!(sensors.len(), values.len());
        for (&i, &v) in sensors.iter().zip(values) {
            self.spins[i] = v.clamp(-1.0, 1.0);
        }
    }

    /// Checks that non-sensor entries are exactly ±1 and sensors in `[-1, 1]`.
    pub fn is_valid_for(&self, genome: &IsingGenome) -> bool {
        self.spins.len() == genome.n()
            && self.spins.iter().zip(genome.classes()).all(|(&s, c)| match c {
                NeuronClass::Sensor => (-1.0..=1.0).contains(&s),
                _ => s == 1.0 || s == -1.0,
            })
    }
}

/// Accounting for one or more sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub attempts: u64,
    pub flips: u64,
}

impl std::ops::AddAssign for SweepStats {
    fn add_assign(&mut self, rhs: Self) {
        self.attempts += rhs.attempts;
        self.flips += rhs.flips;
    }
}

/// A genome compiled for fast simulation: the symmetric effective coupling
/// `K = W + W^T` with `W = A ∘ J`, plus the set of updatable neurons.
#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    coupling: Vec<f64>,
    beta: f64,
    free: Vec<usize>,
    order: Vec<usize>,
    dynamics: Dynamics,
}

impl Network {
    pub fn new(genome: &IsingGenome) -> Self {
        Self::with_free(genome, genome.free_indices())
    }

    /// Every neuron, sensors included, is updated as a spin.
    pub fn all_free(genome: &IsingGenome) -> Self {
        Self::with_free(genome, (0..genome.n()).collect())
    }

    fn with_free(genome: &IsingGenome, free: Vec<usize>) -> Self {
        let n = genome.n();
        let mut coupling = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                coupling[i * n + j] = genome.effective_weight(i, j) + genome.effective_weight(j, i);
            }
        }
        let order = free.clone();
        Network { n, coupling, beta: genome.beta(), free, order, dynamics: Dynamics::default() }
    }

    pub fn with_dynamics(mut self, dynamics: Dynamics) -> Self {
        self.dynamics = dynamics;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// `e = -sum_{i<j} K_ij s_i s_j`, equal to the ordered-pair sum.
    pub fn energy(&self, s: &[f64]) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for i in 0..n {
            let row = &self.coupling[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in (i + 1)..n {
                acc += row[j] * s[j];
            }
            e -= s[i] * acc;
        }
        e
    }

    #[inline]
    pub fn local_field(&self, s: &[f64], i: usize) -> f64 {
        let row = &self.coupling[i * self.n..(i + 1) * self.n];
        row.iter().zip(s).map(|(k, x)| k * x).sum()
    }

    /// `e(s with s_i flipped) - e(s)`.
    #[inline]
    pub fn delta_energy(&self, s: &[f64], i: usize) -> f64 {
        2.0 * s[i] * self.local_field(s, i)
    }

    /// One sequential sweep over the free neurons in a fresh random order.
    /// Exactly one uniform draw is consumed per visited neuron after the
    /// shuffle.
    pub fn sweep<R: Rng + ?Sized>(&mut self, s: &mut [f64], rng: &mut R) -> SweepStats {
        self.order.shuffle(rng);
        let mut flips = 0;
        for k in 0..self.order.len() {
            let i = self.order[k];
            let de = self.delta_energy(s, i);
            let p = self.dynamics.acceptance(de, self.beta);
            if rng.random::<f64>() < p {
                s[i] = -s[i];
                flips += 1;
            }
        }
        SweepStats { attempts: self.order.len() as u64, flips }
    }

    pub fn thermalize<R: Rng + ?Sized>(
        &mut self,
        s: &mut [f64],
        n_iterations: usize,
        rng: &mut R,
    ) -> SweepStats {
        let mut stats = SweepStats::default();
        for _ in 0..n_iterations {
            stats += self.sweep(s, rng);
        }
        stats
    }
}

fn check_len(genome: &IsingGenome, state: &NetworkState) -> Result<()> {
    if state.len() != genome.n() {
        return Err(Error::DimensionMismatch { expected: genome.n(), found: state.len() });
    }
    Ok(())
}

/// `e = -sum_{i,j} A_ij J_ij s_i s_j`.
pub fn network_energy(genome: &IsingGenome, state: &NetworkState) -> Result<f64> {
    check_len(genome, state)?;
    Ok(Network::new(genome).energy(&state.spins))
}

/// Energy change caused by flipping non-sensor neuron `i`.
pub fn delta_energy(genome: &IsingGenome, state: &NetworkState, i: usize) -> Result<f64> {
    check_len(genome, state)?;
    if i >= genome.n() {
        return Err(Error::IndexOutOfRange { index: i, n: genome.n() });
    }
    if genome.classes()[i] == NeuronClass::Sensor {
        return Err(Error::SensorNeuron(i));
    }
    let n = genome.n();
    let s = &state.spins;
    let field: f64 = (0..n)
        .map(|j| (genome.effective_weight(i, j) + genome.effective_weight(j, i)) * s[j])
        .sum();
    Ok(2.0 * s[i] * field)
}

/// One Glauber sweep over the non-sensor neurons of `genome`.
pub fn glauber_sweep<R: Rng + ?Sized>(
    genome: &IsingGenome,
    state: &mut NetworkState,
    rng: &mut R,
) -> Result<SweepStats> {
    check_len(genome, state)?;
    Ok(Network::new(genome).sweep(&mut state.spins, rng))
}

pub fn thermalize<R: Rng + ?Sized>(
    genome: &IsingGenome,
    state: &mut NetworkState,
    n_iterations: usize,
    rng: &mut R,
) -> Result<SweepStats> {
    check_len(genome, state)?;
    Ok(Network::new(genome).thermalize(&mut state.spins, n_iterations, rng))
}
