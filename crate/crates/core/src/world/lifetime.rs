use rand::seq::SliceRandom;

use super::{consume, sense, step_agent, SensorReading, WorldConfig, WorldState};
use crate::error::{Error, Result};
use crate::ising::{read_motors, IsingGenome, Network, NetworkState};
use crate::rng::{streams, Seed, SimRng};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LifetimeOptions {
    pub record_sensors: bool,
    pub record_traces: bool,
}

impl LifetimeOptions {
    pub fn everything() -> Self {
        LifetimeOptions { record_sensors: true, record_traces: true }
    }
}

/// Every sensor reading, per agent, in step order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SensorLog {
    pub per_agent: Vec<Vec<SensorReading>>,
}

/// Per-step energy and speed after the step was applied, plus meal count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentTrace {
    pub energy: Vec<f64>,
    pub speed: Vec<f64>,
    pub meals: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeOutcome {
    /// Mean energy over steps `1..=lifespan`.
    pub fitness: Vec<f64>,
    pub sensor_log: Option<SensorLog>,
    pub traces: Option<Vec<AgentTrace>>,
    pub final_world: WorldState,
}

/// Simulates one shared lifetime of `genomes` in a fresh world.
///
/// The world (initial layout, per-step agent order, food respawns) draws from
/// `seed.child(WORLD)`; agent `i`'s network draws from
/// `seed.child(AGENTS).child(i)`.
pub fn run_lifetime(
    genomes: &[IsingGenome],
    config: &WorldConfig,
    seed: Seed,
    options: LifetimeOptions,
) -> Result<LifetimeOutcome> {
    if genomes.len() != config.n_agents {
        return Err(Error::PopulationSize { expected: config.n_agents, found: genomes.len() });
    }
    config.validate()?;
    let n = genomes.len();
    let mut world_rng = seed.child(streams::WORLD).rng();
    let mut world = WorldState::scatter(config, n, &mut world_rng);

    struct Brain {
        net: Network,
        state: NetworkState,
        sensors: Vec<usize>,
        motors: Vec<usize>,
        rng: SimRng,
    }
    let agent_seed = seed.child(streams::AGENTS);
    let mut brains: Vec<Brain> = genomes
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = agent_seed.child(i as u64).rng();
            let state = NetworkState::random(g, &mut rng);
            let sensors = g.sensor_indices();
            let motors = g.motor_indices();
            if sensors.len() != 4 {
                return Err(Error::DimensionMismatch { expected: 4, found: sensors.len() });
            }
            Ok(Brain {
                net: Network::new(g).with_dynamics(config.dynamics),
                state,
                sensors,
                motors,
                rng,
            })
        })
        .collect::<Result<_>>()?;

    let mut energy_sum = vec![0.0; n];
    let mut sensor_log = options
        .record_sensors
        .then(|| SensorLog { per_agent: vec![Vec::with_capacity(config.lifespan); n] });
    let mut traces = options.record_traces.then(|| {
        vec![
            AgentTrace {
                energy: Vec::with_capacity(config.lifespan),
                speed: Vec::with_capacity(config.lifespan),
                meals: 0,
            };
            n
        ]
    });

    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..config.lifespan {
        order.shuffle(&mut world_rng);
        for &i in &order {
            let reading = sense(&world, &world.agents[i], config);
            let brain = &mut brains[i];
            brain.state.set_sensors(&brain.sensors, &reading.to_array());
            brain.net.thermalize(&mut brain.state.spins, config.thermalization_steps, &mut brain.rng);
            let commands = read_motors(&brain.state, &brain.motors)?;
            let mut agent = step_agent(&world.agents[i], commands, config);
            let ate = consume(&mut world, &mut agent, config, &mut world_rng);
            world.agents[i] = agent;
            if let Some(log) = sensor_log.as_mut() {
                log.per_agent[i].push(reading);
            }
            if ate {
                if let Some(t) = traces.as_mut() {
                    t[i].meals += 1;
                }
            }
        }
        world.step += 1;
        for (i, a) in world.agents.iter().enumerate() {
            energy_sum[i] += a.energy;
            if let Some(t) = traces.as_mut() {
                t[i].energy.push(a.energy);
                t[i].speed.push(a.speed);
            }
        }
    }

    let fitness = energy_sum.iter().map(|s| s / config.lifespan as f64).collect();
    Ok(LifetimeOutcome { fitness, sensor_log, traces, final_world: world })
}
