//! The shared periodic foraging arena.
//!
//! Agents move on a torus of side `world_size`, pay an energy cost
//! proportional to their speed and gain energy by eating food particles.
//! The food count is conserved: every eaten particle respawns uniformly.

mod lifetime;

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{Dynamics, MotorOutput};

pub use lifetime::{run_lifetime, AgentTrace, LifetimeOptions, LifetimeOutcome, SensorLog};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Food is eaten on contact.
    #[default]
    Simple,
    /// Food is eaten only at speed `<= v_thresh`.
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub world_size: f64,
    pub n_agents: usize,
    pub n_food: usize,
    pub lifespan: usize,
    pub e_init: f64,
    pub task: Task,
    pub v_thresh: f64,
    pub eat_radius: f64,
    pub food_energy: f64,
    /// Energy lost per unit speed per step.
    pub move_cost_coeff: f64,
    pub a_lin: f64,
    pub a_rot: f64,
    pub v_max: f64,
    /// Per-step velocity retention factor.
    pub drag: f64,
    /// Scale of the saturating energy sensor.
    pub e_scale: f64,
    /// Network sweeps between sensor update and motor readout.
    pub thermalization_steps: usize,
    pub dynamics: Dynamics,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            world_size: 100.0,
            n_agents: 50,
            n_food: 100,
            lifespan: 2000,
            e_init: 2.0,
            task: Task::Simple,
            v_thresh: 0.05,
            eat_radius: 1.0,
            food_energy: 1.0,
            move_cost_coeff: 0.01,
            a_lin: 0.05,
            a_rot: 0.1,
            v_max: 1.0,
            drag: 0.98,
            e_scale: 10.0,
            thermalization_steps: 10,
            dynamics: Dynamics::default(),
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("world_size", self.world_size),
            ("e_init", self.e_init),
            ("v_thresh", self.v_thresh),
            ("eat_radius", self.eat_radius),
            ("food_energy", self.food_energy),
            ("move_cost_coeff", self.move_cost_coeff),
            ("a_lin", self.a_lin),
            ("a_rot", self.a_rot),
            ("v_max", self.v_max),
            ("drag", self.drag),
            ("e_scale", self.e_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("world.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("n_agents", self.n_agents),
            ("n_food", self.n_food),
            ("lifespan", self.lifespan),
            ("thermalization_steps", self.thermalization_steps),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("world.{name} must be at least 1")));
            }
        }
        if self.v_thresh >= self.v_max {
            return Err(Error::InvalidConfig("world.v_thresh must be below v_max".into()));
        }
        if self.drag > 1.0 {
            return Err(Error::InvalidConfig("world.drag must not exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub position: [f64; 2],
    pub heading: f64,
    pub speed: f64,
    pub energy: f64,
    pub genome_id: usize,
}

impl Agent {
    pub fn at_rest(position: [f64; 2], heading: f64, energy: f64, genome_id: usize) -> Self {
        Agent { position, heading, speed: 0.0, energy, genome_id }
    }
}

/// Normalized sensor values, every component in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub theta_food: f64,
    pub d_food: f64,
    pub v_norm: f64,
    pub e_norm: f64,
}

impl SensorReading {
    pub fn to_array(self) -> [f64; 4] {
        [self.theta_food, self.d_food, self.v_norm, self.e_norm]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub agents: Vec<Agent>,
    pub food: Vec<[f64; 2]>,
    pub step: usize,
}

impl WorldState {
    /// Uniformly scattered food and agents at rest with random headings.
    pub fn scatter<R: Rng + ?Sized>(config: &WorldConfig, n_agents: usize, rng: &mut R) -> Self {
        let food = (0..config.n_food).map(|_| random_point(config.world_size, rng)).collect();
        let agents = (0..n_agents)
            .map(|id| {
                let p = random_point(config.world_size, rng);
                let heading = rng.random_range(-PI..PI);
                Agent::at_rest(p, heading, config.e_init, id)
            })
            .collect();
        WorldState { agents, food, step: 0 }
    }
}

pub fn random_point<R: Rng + ?Sized>(size: f64, rng: &mut R) -> [f64; 2] {
    [rng.random_range(0.0..size), rng.random_range(0.0..size)]
}

#[inline]
fn wrap_coord(x: f64, size: f64) -> f64 {
    let w = x.rem_euclid(size);
    // rem_euclid can round up to exactly `size` for tiny negative inputs
    if w >= size {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Minimum-image displacement from `from` to `to` on the torus.
#[inline]
pub fn torus_delta(from: [f64; 2], to: [f64; 2], size: f64) -> [f64; 2] {
    let half = size / 2.0;
    let mut d = [to[0] - from[0], to[1] - from[1]];
    for c in &mut d {
        if *c > half {
            *c -= size;
        } else if *c < -half {
            *c += size;
        }
    }
    d
}

#[inline]
pub fn torus_distance(a: [f64; 2], b: [f64; 2], size: f64) -> f64 {
    let d = torus_delta(a, b, size);
    d[0].hypot(d[1])
}

/// Index and distance of the nearest food particle (first index on ties).
pub fn nearest_food(food: &[[f64; 2]], position: [f64; 2], size: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &f) in food.iter().enumerate() {
        let d = torus_distance(position, f, size);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    best
}

/// Reads the agent's four sensors.
///
/// * `theta_food`: bearing of the nearest food relative to the heading, over pi.
/// * `d_food`: `2 * dist / (world_size / 2) - 1`, clamped.
/// * `v_norm`: `2 * v / v_max - 1`.
/// * `e_norm`: `2 * tanh(E / e_scale) - 1`, clamped.
pub fn sense(world: &WorldState, agent: &Agent, config: &WorldConfig) -> SensorReading {
    let size = config.world_size;
    let (theta_food, d_food) = match nearest_food(&world.food, agent.position, size) {
        Some((k, dist)) => {
            let d = torus_delta(agent.position, world.food[k], size);
            let bearing = if dist == 0.0 { 0.0 } else { wrap_angle(d[1].atan2(d[0]) - agent.heading) };
            let d_ref = size / 2.0;
            ((bearing / PI).clamp(-1.0, 1.0), (2.0 * dist / d_ref - 1.0).clamp(-1.0, 1.0))
        }
        None => (0.0, 1.0),
    };
    SensorReading {
        theta_food,
        d_food,
        v_norm: (2.0 * agent.speed / config.v_max - 1.0).clamp(-1.0, 1.0),
        e_norm: (2.0 * (agent.energy / config.e_scale).tanh() - 1.0).clamp(-1.0, 1.0),
    }
}

/// Applies motor commands: turn, accelerate with drag, move, pay the
/// movement cost.
pub fn step_agent(agent: &Agent, commands: MotorOutput, config: &WorldConfig) -> Agent {
    let heading = wrap_angle(agent.heading + config.a_rot * commands.rotational.sign());
    let speed =
        (config.drag * agent.speed + config.a_lin * commands.linear.sign()).clamp(0.0, config.v_max);
    let size = config.world_size;
    let position = if speed == 0.0 {
        agent.position
    } else {
        [
            wrap_coord(agent.position[0] + speed * heading.cos(), size),
            wrap_coord(agent.position[1] + speed * heading.sin(), size),
        ]
    };
    Agent {
        position,
        heading,
        speed,
        energy: agent.energy - config.move_cost_coeff * speed,
        genome_id: agent.genome_id,
    }
}

/// Eats the nearest food within `eat_radius` when the task allows it, then
/// respawns that particle at a uniform position. Returns whether food was
/// eaten.
pub fn consume<R: Rng + ?Sized>(
    world: &mut WorldState,
    agent: &mut Agent,
    config: &WorldConfig,
    rng: &mut R,
) -> bool {
    if config.task == Task::Hard && agent.speed > config.v_thresh {
        return false;
    }
    match nearest_food(&world.food, agent.position, config.world_size) {
        Some((k, d)) if d <= config.eat_radius => {
            agent.energy += config.food_energy;
            world.food[k] = random_point(config.world_size, rng);
            true
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::MotorCommand::*;
    use crate::rng::Seed;

    fn world_with_food(food: Vec<[f64; 2]>) -> WorldState {
        WorldState { agents: vec![], food, step: 0 }
    }

    #[test]
    fn food_ahead_and_behind() {
        let cfg = WorldConfig::default();
        let agent = Agent::at_rest([10.0, 10.0], 0.0, 2.0, 0);
        let r = sense(&world_with_food(vec![[10.0, 10.0]]), &agent, &cfg);
        assert_eq!((r.theta_food, r.d_food), (0.0, -1.0));
        let r = sense(&world_with_food(vec![[5.0, 10.0]]), &agent, &cfg);
        assert!((r.theta_food.abs() - 1.0).abs() < 1e-12);
        let r = sense(&world_with_food(vec![[10.0, 12.0]]), &agent, &cfg);
        assert!((r.theta_food - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sensing_wraps_across_the_boundary() {
        let cfg = WorldConfig::default();
        let agent = Agent::at_rest([99.5, 50.0], 0.0, 2.0, 0);
        // 1.0 away through the seam, 40 away directly
        let w = world_with_food(vec![[0.5, 50.0], [60.0, 50.0]]);
        assert_eq!(nearest_food(&w.food, agent.position, 100.0).unwrap().0, 0);
        let r = sense(&w, &agent, &cfg);
        assert!(r.theta_food.abs() < 1e-12);
        assert!((r.d_food - (2.0 * 1.0 / 50.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sensor_ranges() {
        let cfg = WorldConfig::default();
        let mut rng = Seed::new(5).rng();
        let w = WorldState::scatter(&cfg, 10, &mut rng);
        for mut a in w.agents.clone() {
            for e in [-50.0, 0.0, 2.0, 40.0] {
                a.energy = e;
                a.speed = rng.random_range(0.0..=1.0);
                for x in sense(&w, &a, &cfg).to_array() {
                    assert!((-1.0..=1.0).contains(&x));
                }
            }
        }
    }

    #[test]
    fn resting_agent_is_free() {
        let cfg = WorldConfig::default();
        let a = Agent::at_rest([3.0, 4.0], 0.3, 2.0, 0);
        let b = step_agent(&a, MotorOutput { linear: NoOp, rotational: NoOp }, &cfg);
        assert_eq!((b.position, b.energy, b.speed), (a.position, a.energy, 0.0));
    }

    #[test]
    fn accelerate_from_rest() {
        let cfg = WorldConfig::default();
        let a = Agent::at_rest([3.0, 4.0], 0.0, 2.0, 0);
        let b = step_agent(&a, MotorOutput { linear: Accelerate, rotational: NoOp }, &cfg);
        assert_eq!(b.speed, cfg.a_lin);
        assert_eq!(b.energy, 2.0 - cfg.move_cost_coeff * cfg.a_lin);
        assert!((b.position[0] - 3.05).abs() < 1e-12);
    }

    #[test]
    fn wraps_at_the_edge() {
        let cfg = WorldConfig::default();
        let mut a = Agent::at_rest([100.0 - 1e-3, 4.0], 0.0, 2.0, 0);
        a.speed = 0.5;
        let b = step_agent(&a, MotorOutput { linear: NoOp, rotational: NoOp }, &cfg);
        assert!(b.position[0] < 1.0 && b.position[0] >= 0.0);
        assert!((b.position[0] - (0.49 - 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn hard_task_requires_slow_speed() {
        let cfg = WorldConfig { task: Task::Hard, ..Default::default() };
        let mut rng = Seed::new(1).rng();
        let mut w = world_with_food(vec![[5.0, 5.0]; 100]);
        let mut a = Agent::at_rest([5.0, 5.0], 0.0, 2.0, 0);
        a.speed = 0.5;
        assert!(!consume(&mut w, &mut a, &cfg, &mut rng));
        assert_eq!(w.food.len(), 100);
        assert_eq!(a.energy, 2.0);
        a.speed = cfg.v_thresh;
        assert!(consume(&mut w, &mut a, &cfg, &mut rng));
        assert_eq!(a.energy, 3.0);
    }

    #[test]
    fn simple_task_eats_and_respawns() {
        let cfg = WorldConfig::default();
        let mut rng = Seed::new(2).rng();
        let mut w = WorldState::scatter(&cfg, 0, &mut rng);
        let target = w.food[17];
        let mut a = Agent::at_rest([target[0] + 0.5, target[1]], 0.0, 2.0, 0);
        a.speed = 1.0;
        assert!(consume(&mut w, &mut a, &cfg, &mut rng));
        assert_eq!(w.food.len(), 100);
        assert_ne!(w.food[17], target);
        assert_eq!(a.energy, 3.0);
    }

    #[test]
    fn nothing_in_reach_changes_nothing() {
        let cfg = WorldConfig::default();
        let mut rng = Seed::new(3).rng();
        let mut w = world_with_food(vec![[50.0, 50.0]]);
        let before = w.clone();
        let mut a = Agent::at_rest([10.0, 10.0], 0.0, 2.0, 0);
        assert!(!consume(&mut w, &mut a, &cfg, &mut rng));
        assert_eq!(w, before);
        assert_eq!(a.energy, 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(WorldConfig::default().validate().is_ok());
        let bad = WorldConfig { v_thresh: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = WorldConfig { thermalization_steps: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!(wrap_angle(0.1) == 0.1);
    }
}
