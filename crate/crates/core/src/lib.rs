//! Evolving foraging agents controlled by generalized Ising networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`ising`]: network genome, energy, Glauber dynamics and motor readout.
//! * [`world`]: the shared periodic foraging arena and lifetime simulation.
//! * [`ga`] and [`es`]: the two evolutionary optimizers.
//! * [`criticality`]: heat-capacity curves, distance to criticality and
//!   finite-size scaling on random networks.
//! * [`benchmarks`]: Rastrigin / Rosenbrock / Sphere comparison harness.
//! * [`analysis`]: generalizability, genetic perturbation, operator
//!   histograms and the Mann-Whitney U test.
//!
//! Every stochastic routine takes either a [`rng::Seed`] or a caller-owned
//! RNG; results are bit-reproducible for a fixed root seed.

pub mod analysis;
pub mod benchmarks;
pub mod criticality;
pub mod error;
pub mod es;
pub mod evolution;
pub mod ga;
pub mod ising;
pub mod lineage;
pub mod rng;
pub mod stats;
pub mod world;

pub use error::{Error, Result};
