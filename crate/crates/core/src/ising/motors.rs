use serde::{Deserialize, Serialize};

use super::network::NetworkState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotorCommand {
    Accelerate,
    Decelerate,
    NoOp,
}

impl MotorCommand {
    /// Both neurons up accelerates, both down decelerates, disagreement
    /// does nothing.
    pub fn from_pair(a: f64, b: f64) -> Self {
        match (a > 0.0, b > 0.0) {
            (true, true) => MotorCommand::Accelerate,
            (false, false) => MotorCommand::Decelerate,
            _ => MotorCommand::NoOp,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            MotorCommand::Accelerate => 1.0,
            MotorCommand::Decelerate => -1.0,
            MotorCommand::NoOp => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotorOutput {
    pub linear: MotorCommand,
    pub rotational: MotorCommand,
}

/// Reads the two motor units `(m1, m2)` (linear) and `(m3, m4)` (rotational).
pub fn read_motors(state: &NetworkState, motors: &[usize]) -> Result<MotorOutput> {
    if motors.len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: motors.len() });
    }
    let s = |k: usize| state.spins[motors[k]];
    Ok(MotorOutput {
        linear: MotorCommand::from_pair(s(0), s(1)),
        rotational: MotorCommand::from_pair(s(2), s(3)),
    })
}
