use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WEIGHT_BOUND;
use crate::error::{Error, Result};

pub const GENOME_SCHEMA: &str = "ising-genome/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeuronClass {
    Sensor,
    Hidden,
    Motor,
}

/// Neuron counts per class. Neurons are laid out sensors first, then hidden,
/// then motors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub sensors: usize,
    pub hidden: usize,
    pub motors: usize,
}

impl Default for Layout {
    fn default() -> Self {
        Layout::with_hidden(4)
    }
}

impl Layout {
    /// Four sensors, four motors and `hidden` hidden neurons.
    pub fn with_hidden(hidden: usize) -> Self {
        Layout { sensors: 4, hidden, motors: 4 }
    }

    /// One third sensors, one third motors, remainder hidden.
    pub fn thirds(n: usize) -> Self {
        let third = n / 3;
        Layout { sensors: third, hidden: n - 2 * third, motors: third }
    }

    pub fn n(&self) -> usize {
        self.sensors + self.hidden + self.motors
    }

    pub fn classes(&self) -> Vec<NeuronClass> {
        std::iter::repeat_n(NeuronClass::Sensor, self.sensors)
            .chain(std::iter::repeat_n(NeuronClass::Hidden, self.hidden))
            .chain(std::iter::repeat_n(NeuronClass::Motor, self.motors))
            .collect()
    }
}

/// Admissible support of the adjacency matrix: no self-loops and no edges
/// between a sensor and a motor neuron in either direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyMask {
    n: usize,
    allowed: Vec<bool>,
}

impl TopologyMask {
    pub fn from_classes(classes: &[NeuronClass]) -> Self {
        use NeuronClass::*;
        let n = classes.len();
        let mut allowed = vec![false; n * n];
        for (i, ci) in classes.iter().enumerate() {
            for (j, cj) in classes.iter().enumerate() {
                let forbidden =
                    i == j || matches!((ci, cj), (Sensor, Motor) | (Motor, Sensor));
                allowed[i * n + j] = !forbidden;
            }
        }
        TopologyMask { n, allowed }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n + j]
    }

    /// Row-major flat indices of all admissible entries.
    pub fn admissible(&self) -> Vec<usize> {
        (0..self.allowed.len()).filter(|&k| self.allowed[k]).collect()
    }
}

/// Initial weight/edge distribution of an unevolved genome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenomeInit {
    /// Weights drawn from `U(-weight_range, weight_range)`.
    pub weight_range: f64,
    /// Probability that an admissible edge is present.
    pub edge_density: f64,
}

impl Default for GenomeInit {
    fn default() -> Self {
        GenomeInit { weight_range: 1.0, edge_density: 1.0 }
    }
}

/// The evolvable unit: adjacency `A`, weights `J` and inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingGenome {
    classes: Vec<NeuronClass>,
    mask: TopologyMask,
    adjacency: Vec<bool>,
    weights: Vec<f64>,
    beta: f64,
}

impl IsingGenome {
    /// Builds a genome from raw row-major matrices, validating every
    /// invariant.
    pub fn new(
        classes: Vec<NeuronClass>,
        adjacency: Vec<bool>,
        weights: Vec<f64>,
        beta: f64,
    ) -> Result<Self> {
        let n = classes.len();
        for len in [adjacency.len(), weights.len()] {
            if len != n * n {
                return Err(Error::DimensionMismatch { expected: n * n, found: len });
            }
        }
        let mask = TopologyMask::from_classes(&classes);
        let genome = IsingGenome { classes, mask, adjacency, weights, beta };
        genome.validate()?;
        Ok(genome)
    }

    /// A genome with every admissible edge present and all weights zero.
    pub fn zeros(layout: Layout, beta: f64) -> Self {
        let classes = layout.classes();
        let n = classes.len();
        let mask = TopologyMask::from_classes(&classes);
        let adjacency = mask.allowed.clone();
        IsingGenome { classes, mask, adjacency, weights: vec![0.0; n * n], beta }
    }

    pub fn random<R: Rng + ?Sized>(
        layout: Layout,
        beta: f64,
        init: &GenomeInit,
        rng: &mut R,
    ) -> Self {
        let mut g = IsingGenome::zeros(layout, beta);
        let r = init.weight_range.min(WEIGHT_BOUND);
        for k in g.mask.admissible() {
            g.weights[k] = rng.random_range(-r..=r);
            g.adjacency[k] = init.edge_density >= 1.0 || rng.random::<f64>() < init.edge_density;
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for k in 0..n * n {
            if self.adjacency[k] && !self.mask.allowed[k] {
                return Err(Error::InvalidConfig(format!(
                    "edge ({}, {}) is outside the topology mask",
                    k / n,
                    k % n
                )));
            }
            let w = self.weights[k];
            if !w.is_finite() || w.abs() > WEIGHT_BOUND {
                return Err(Error::InvalidConfig(format!("weight {w} outside [-2, 2]")));
            }
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[NeuronClass] {
        &self.classes
    }

    pub fn mask(&self) -> &TopologyMask {
        &self.mask
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) {
        debug_assert!(beta > 0.0);
        self.beta = beta;
    }

    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n() + j]
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n() + j]
    }

    /// `A_ij * J_ij`.
    #[inline]
    pub fn effective_weight(&self, i: usize, j: usize) -> f64 {
        let k = i * self.n() + j;
        if self.adjacency[k] {
            self.weights[k]
        } else {
            0.0
        }
    }

    pub fn adjacency(&self) -> &[bool] {
        &self.adjacency
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sets `J_ij`, clamped to the weight bounds.
    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) {
        let n = self.n();
        self.weights[i * n + j] = w.clamp(-WEIGHT_BOUND, WEIGHT_BOUND);
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn adjacency_mut(&mut self) -> &mut [bool] {
        &mut self.adjacency
    }

    /// Sets `A_ij`. Returns false (and leaves the genome untouched) when the
    /// topology mask forbids the edge.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) -> bool {
        if present && !self.mask.allowed(i, j) {
            return false;
        }
        let n = self.n();
        self.adjacency[i * n + j] = present;
        true
    }

    /// Flat indices of present edges.
    pub fn edges(&self) -> Vec<usize> {
        (0..self.adjacency.len()).filter(|&k| self.adjacency[k]).collect()
    }

    pub fn indices_of(&self, class: NeuronClass) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.classes[i] == class).collect()
    }

    pub fn sensor_indices(&self) -> Vec<usize> {
        self.indices_of(NeuronClass::Sensor)
    }

    pub fn motor_indices(&self) -> Vec<usize> {
        self.indices_of(NeuronClass::Motor)
    }

    /// Hidden and motor neurons, in index order.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.classes[i] != NeuronClass::Sensor).collect()
    }

    /// Frobenius norm of the effective connectivity `A ∘ J`.
    pub fn frobenius_norm(&self) -> f64 {
        self.adjacency
            .iter()
            .zip(&self.weights)
            .filter(|(a, _)| **a)
            .map(|(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&GenomeRecord::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<GenomeRecord>(text)?.try_into()
    }
}

/// Versioned on-disk form. Boolean matrices are row-major 0/1 arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct GenomeRecord {
    schema: String,
    #[serde(rename = "N")]
    n: usize,
    classes: Vec<NeuronClass>,
    mask: Vec<u8>,
    #[serde(rename = "A")]
    a: Vec<u8>,
    #[serde(rename = "J")]
    j: Vec<f64>,
    beta: f64,
}

impl From<&IsingGenome> for GenomeRecord {
    fn from(g: &IsingGenome) -> Self {
        GenomeRecord {
            schema: GENOME_SCHEMA.to_string(),
            n: g.n(),
            classes: g.classes.clone(),
            mask: g.mask.allowed.iter().map(|&b| b as u8).collect(),
            a: g.adjacency.iter().map(|&b| b as u8).collect(),
            j: g.weights.clone(),
            beta: g.beta,
        }
    }
}

impl TryFrom<GenomeRecord> for IsingGenome {
    type Error = Error;

    fn try_from(r: GenomeRecord) -> Result<Self> {
        if r.schema != GENOME_SCHEMA {
            return Err(Error::Schema(format!("expected {GENOME_SCHEMA}, found {}", r.schema)));
        }
        if r.classes.len() != r.n {
            return Err(Error::DimensionMismatch { expected: r.n, found: r.classes.len() });
        }
        let expected_mask = TopologyMask::from_classes(&r.classes);
        let mask: Vec<bool> = r.mask.iter().map(|&b| b != 0).collect();
        if mask != expected_mask.allowed {
            return Err(Error::Schema("stored mask disagrees with neuron classes".into()));
        }
        IsingGenome::new(r.classes, r.a.iter().map(|&b| b != 0).collect(), r.j, r.beta)
    }
}

impl Serialize for IsingGenome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GenomeRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for IsingGenome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let record = GenomeRecord::deserialize(d)?;
        IsingGenome::try_from(record).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn mask_forbids_self_loops_and_sensor_motor() {
        let classes = Layout::default().classes();
        let mask = TopologyMask::from_classes(&classes);
        for i in 0..12 {
            assert!(!mask.allowed(i, i));
            for j in 0..12 {
                let sm = matches!(
                    (classes[i], classes[j]),
                    (NeuronClass::Sensor, NeuronClass::Motor) | (NeuronClass::Motor, NeuronClass::Sensor)
                );
                if sm {
                    assert!(!mask.allowed(i, j));
                } else if i != j {
                    assert!(mask.allowed(i, j));
                }
            }
        }
        // 144 entries - 12 diagonal - 2*16 sensor/motor
        assert_eq!(mask.admissible().len(), 100);
    }

    #[test]
    fn layout_thirds() {
        assert_eq!(Layout::thirds(12), Layout { sensors: 4, hidden: 4, motors: 4 });
        assert_eq!(Layout::thirds(25), Layout { sensors: 8, hidden: 9, motors: 8 });
        assert_eq!(Layout::thirds(100).n(), 100);
    }

    #[test]
    fn random_genome_respects_invariants() {
        let mut rng = Seed::new(1).rng();
        let g = IsingGenome::random(
            Layout::with_hidden(20),
            1.0,
            &GenomeInit { weight_range: 1.0, edge_density: 0.5 },
            &mut rng,
        );
        g.validate().unwrap();
        assert_eq!(g.n(), 28);
        assert!(g.weights().iter().all(|w| w.abs() <= 1.0));
    }

    #[test]
    fn set_edge_refuses_forbidden_entries() {
        let mut g = IsingGenome::zeros(Layout::default(), 1.0);
        assert!(!g.set_edge(0, 11, true));
        assert!(!g.set_edge(3, 3, true));
        assert!(g.set_edge(0, 5, false));
        assert!(!g.edge(0, 5));
    }

    #[test]
    fn json_round_trip_and_schema_check() {
        let mut rng = Seed::new(3).rng();
        let g = IsingGenome::random(Layout::default(), 2.5, &GenomeInit::default(), &mut rng);
        let text = g.to_json().unwrap();
        assert!(text.contains("\"schema\":\"ising-genome/v1\""));
        assert!(text.contains("\"N\":12"));
        assert_eq!(IsingGenome::from_json(&text).unwrap(), g);

        let bad = text.replace("ising-genome/v1", "ising-genome/v0");
        assert!(matches!(IsingGenome::from_json(&bad), Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_out_of_bounds_weight_and_beta() {
        let classes = Layout::default().classes();
        let mut w = vec![0.0; 144];
        w[1] = 2.5;
        assert!(IsingGenome::new(classes.clone(), vec![false; 144], w, 1.0).is_err());
        assert!(IsingGenome::new(classes, vec![false; 144], vec![0.0; 144], 0.0).is_err());
    }
}
