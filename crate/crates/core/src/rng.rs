//! Deterministic seed splitting.
//!
//! A run owns one root [`Seed`]. Every stochastic component derives its own
//! stream by walking a label path from the root, e.g.
//! `root.child(replicate).child(generation).child(streams::WORLD)`.
//! A child seed is `splitmix64(parent ^ splitmix64(label + GOLDEN))`, and the
//! RNG for a seed is ChaCha8 seeded with that 64-bit value. Because streams
//! are addressed by label rather than drawn from a shared generator, fanning
//! work out over threads never changes the numbers any component sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Well-known stream labels.
pub mod streams {
    pub const WORLD: u64 = 0x5752_4c44;
    pub const AGENTS: u64 = 0x4147_4e54;
    pub const EVOLVE: u64 = 0x4556_4f4c;
    pub const INIT: u64 = 0x494e_4954;
    pub const CRITICALITY: u64 = 0x4352_4954;
    pub const PERTURB: u64 = 0x5045_5254;
    pub const OBJECTIVE: u64 = 0x4f42_4a53;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn new(root: u64) -> Self {
        Seed(root)
    }

    pub fn child(self, label: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(label.wrapping_add(GOLDEN))))
    }

    pub fn path(self, labels: &[u64]) -> Seed {
        labels.iter().fold(self, |s, &l| s.child(l))
    }

    pub fn rng(self) -> SimRng {
        SimRng::seed_from_u64(self.0)
    }
}
