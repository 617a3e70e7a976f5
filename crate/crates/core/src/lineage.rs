use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The last evolutionary operator that produced an individual.
///
/// The GA emits `Copy`, `Mutate` and `Mate`; the ES emits `Elite` for carried
/// over elites and `Sampled` for fresh draws from the search distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineageTag {
    /// First generation, no operator applied yet.
    Init,
    Copy,
    Mutate,
    Mate,
    Elite,
    Sampled,
}

impl LineageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LineageTag::Init => "init",
            LineageTag::Copy => "copy",
            LineageTag::Mutate => "mutate",
            LineageTag::Mate => "mate",
            LineageTag::Elite => "elite",
            LineageTag::Sampled => "sampled",
        }
    }
}

impl fmt::Display for LineageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LineageTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "init" => LineageTag::Init,
            "copy" => LineageTag::Copy,
            "mutate" => LineageTag::Mutate,
            "mate" => LineageTag::Mate,
            "elite" => LineageTag::Elite,
            "sampled" => LineageTag::Sampled,
            other => return Err(Error::Schema(format!("unknown lineage tag {other:?}"))),
        })
    }
}

/// One individual of one logged generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub agent_id: usize,
    pub fitness: f64,
    pub lineage: LineageTag,
}
