//! Generalized Ising network controller.
//!
//! A genome `(A, J, beta)` defines the energy
//! `e(s) = -sum_{i,j} A_ij J_ij s_i s_j` over all ordered pairs. Sensor
//! neurons are clamped to real values in `[-1, 1]`; hidden and motor neurons
//! are binary spins updated by heat-bath (Glauber) dynamics.

mod genome;
mod motors;
mod network;

pub use genome::{GenomeInit, IsingGenome, Layout, NeuronClass, TopologyMask, GENOME_SCHEMA};
pub use motors::{read_motors, MotorCommand, MotorOutput};
pub use network::{
    delta_energy, flip_probability, glauber_sweep, network_energy, thermalize, Dynamics,
    Network, NetworkState, SignConvention, SweepStats, UpdateRule,
};

/// Bounds on every weight entry.
pub const WEIGHT_BOUND: f64 = 2.0;
