//! The deterministic fixed-timestep run loop coupling distributed laws to
//! inner-loop controllers to plants.
//!
//! Per control tick: freeze a snapshot of every agent's abstract state,
//! evaluate the selected law for all agents on that snapshot, feed each
//! agent's acceleration command to its controller, and substep each plant to
//! the next tick. Identical (config, seed) pairs produce bit-identical logs
//! regardless of thread count, because per-agent work is independent and
//! results merge in agent order.

use super::config::{
    ConsensusConfig, InitialPositions, LawConfig, MatrixKind, MinMaxConfig, ScenarioConfig,
};
use super::log::{LogMeta, TrajectoryLog};
use crate::control::{advance_agent, Setpoint};
use crate::dynamics::{DynamicsError, QuadState};
use crate::frames::Vec3;
use crate::graph::{CommGraph, GraphError, SpanningTree};
use crate::laws::{
    AgentAbstractState, ConsensusLaw, ConsensusParams, LawError, MinMaxLaw, MinMaxParams,
    OuterLaw, WaypointLaw,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum ScenarioError {
    #[error("agent {agent} diverged at tick {tick} (t = {time:.3} s): {source}")]
    Divergence {
        agent: usize,
        tick: usize,
        time: f64,
        source: DynamicsError,
        /// Everything logged before the failing tick, for post-mortem output.
        partial: Box<TrajectoryLog>,
    },
    #[error("law failed at tick {tick}: {source}")]
    Law { tick: usize, source: LawError },
    #[error("communication graph rejected: {0}")]
    Graph(#[from] GraphError),
    #[error("unknown custom law '{name}'; register it before running")]
    UnknownCustomLaw { name: String },
}

/// Builder for a named custom law, the compiled-artifact analogue of an
/// inline user control script.
pub type LawBuilder = Box<dyn Fn(&ScenarioConfig) -> Result<Box<dyn OuterLaw>, LawError>>;

/// Registry of custom laws available to `law = custom` scenarios.
#[derive(Default)]
pub struct LawRegistry {
    builders: HashMap<String, LawBuilder>,
}

impl LawRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, builder: LawBuilder) {
        self.builders.insert(name.into(), builder);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.builders.contains_key(name)
    }
}

/// Execution knobs that do not affect results.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Worker threads for per-agent plant stepping; 1 runs serially.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { threads: 1 }
    }
}

/// Initial plant states per the config: explicit list, or uniform draws from
/// the seeded ChaCha8 stream in agent order (x, then y, then z per agent).
pub fn initial_states(cfg: &ScenarioConfig) -> Vec<QuadState> {
    let positions: Vec<Vec3> = match &cfg.robot.initial {
        InitialPositions::Explicit(list) => list.clone(),
        InitialPositions::Random { seed, bounds } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..cfg.robot.count)
                .map(|_| {
                    let mut draw = |lo: f64, hi: f64| {
                        if lo == hi {
                            lo
                        } else {
                            rng.gen_range(lo..hi)
                        }
                    };
                    Vec3::new(
                        draw(bounds[0].0, bounds[0].1),
                        draw(bounds[1].0, bounds[1].1),
                        draw(bounds[2].0, bounds[2].1),
                    )
                })
                .collect()
        }
    };
    positions
        .into_iter()
        .map(|p| QuadState::at_rest(p, &cfg.robot.params))
        .collect()
}

fn build_graph(kind: MatrixKind, matrix: &[Vec<f64>], leaders: &[usize]) -> Result<CommGraph, GraphError> {
    let rows = matrix.to_vec();
    match kind {
        MatrixKind::Adjacency => CommGraph::from_adjacency(rows, leaders),
        MatrixKind::Laplacian => CommGraph::from_laplacian(rows, leaders),
    }
}

fn consensus_from_config(c: &ConsensusConfig, clamp: f64) -> Result<ConsensusLaw, ScenarioError> {
    let leaders: Vec<usize> = if c.leader == 0 { vec![] } else { vec![c.leader - 1] };
    let graph = build_graph(c.matrix_kind, &c.matrix, &leaders)?;
    let leader = if c.leader == 0 { None } else { Some(c.leader - 1) };
    Ok(ConsensusLaw { graph, params: ConsensusParams { damping: c.beta, leader }, clamp })
}

fn minmax_from_config(m: &MinMaxConfig, count: usize) -> Result<MinMaxLaw, ScenarioError> {
    let root = m.root - 1;
    let tree = match &m.tree {
        Some(edges) => {
            let mut parent = vec![None; count];
            for &(c, p) in edges {
                parent[c - 1] = Some(p - 1);
            }
            SpanningTree { root, parent }
        }
        None => {
            let matrix = m.matrix.as_ref().expect("validated: tree or matrix present");
            let graph = build_graph(m.matrix_kind, matrix, &[])?;
            graph.extract_spanning_tree(root)?
        }
    };
    let params = MinMaxParams {
        bounds: m.bounds.clone(),
        tree,
        deadband: m.deadband,
        magnitude: m.magnitude,
    };
    let law = MinMaxLaw::new(params).map_err(|source| ScenarioError::Law { tick: 0, source })?;
    Ok(match &m.root_waypoints {
        Some(wp) => law.with_root_waypoints(wp.clone(), 1.0, 1.0),
        None => law,
    })
}

/// Instantiate the law selected by the config.
pub fn build_law(
    cfg: &ScenarioConfig,
    registry: &LawRegistry,
) -> Result<Box<dyn OuterLaw>, ScenarioError> {
    let clamp = cfg.gains.accel_clamp;
    match &cfg.law {
        LawConfig::Waypoint(w) => Ok(Box::new(WaypointLaw::new(
            w.p_gain,
            w.d_gain,
            clamp,
            w.waypoints.clone(),
            cfg.robot.count,
        ))),
        LawConfig::Consensus(c) => Ok(Box::new(consensus_from_config(c, clamp)?)),
        LawConfig::MinMax(m) => Ok(Box::new(minmax_from_config(m, cfg.robot.count)?)),
        LawConfig::Custom { name } => match registry.builders.get(name) {
            Some(builder) => builder(cfg).map_err(|source| ScenarioError::Law { tick: 0, source }),
            None => Err(ScenarioError::UnknownCustomLaw { name: name.clone() }),
        },
    }
}

fn abstract_states(states: &[QuadState]) -> Vec<AgentAbstractState> {
    states
        .iter()
        .map(|s| AgentAbstractState { position: s.position, velocity: s.velocity })
        .collect()
}

/// Run the scenario to completion, or to the first divergence, returning the
/// full trajectory log.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    registry: &LawRegistry,
    opts: &RunOptions,
) -> Result<TrajectoryLog, ScenarioError> {
    let params = cfg.robot.params.clone();
    let gains = cfg.gains;
    let physics_dt = cfg.timing.physics_dt;
    let substeps = cfg.timing.substeps();
    let ticks = cfg.timing.ticks();

    let mut states = initial_states(cfg);
    // The outer laws command the horizontal plane; altitude holds at spawn.
    let hold_z: Vec<f64> = states.iter().map(|s| s.position.z).collect();
    let mut law = build_law(cfg, registry)?;

    let seed = match &cfg.robot.initial {
        InitialPositions::Random { seed, .. } => *seed,
        InitialPositions::Explicit(_) => 0,
    };
    let meta = LogMeta {
        config_hash: cfg.content_hash(),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut log = TrajectoryLog::new(meta, cfg.robot.count);

    let pool = (opts.threads > 1)
        .then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.threads)
                .build()
                .expect("thread pool")
        });

    for tick in 0..=ticks {
        let time = tick as f64 * cfg.timing.control_dt;
        let snapshot = abstract_states(&states);
        let commands = law
            .tick(&snapshot)
            .map_err(|source| ScenarioError::Law { tick, source })?;
        log.push_tick(time, &states, &commands);
        if tick == ticks {
            break;
        }

        let setpoints: Vec<Setpoint> = commands
            .iter()
            .zip(hold_z.iter())
            .map(|(c, &z)| Setpoint::accel_command(c.accel, z))
            .collect();

        let step_one = |(state, sp): (&QuadState, &Setpoint)| {
            advance_agent(state, sp, &gains, &params, physics_dt, substeps)
        };
        let results: Vec<Result<QuadState, DynamicsError>> = match &pool {
            Some(pool) => pool.install(|| {
                states
                    .par_iter()
                    .zip(setpoints.par_iter())
                    .map(step_one)
                    .collect()
            }),
            None => states.iter().zip(setpoints.iter()).map(step_one).collect(),
        };

        for (agent, result) in results.into_iter().enumerate() {
            match result {
                Ok(next) => states[agent] = next,
                Err(source) => {
                    return Err(ScenarioError::Divergence {
                        agent: agent + 1,
                        tick,
                        time,
                        source,
                        partial: Box::new(log),
                    })
                }
            }
        }
    }

    Ok(log)
}
