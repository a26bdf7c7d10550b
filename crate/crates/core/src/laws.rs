//! Outer-loop distributed control laws. Each law maps a snapshot of every
//! agent's abstract double-integrator state to one acceleration command per
//! agent. Laws are evaluated against a single frozen snapshot per tick, so
//! no agent's command ever depends on another agent's same-tick update.

use crate::frames::Vec3;
use crate::graph::{CommGraph, SpanningTree};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LawError {
    #[error("agent {child}: input bound {beta_c} must strictly exceed parent bound {beta_p}")]
    InvalidBounds { child: usize, beta_c: f64, beta_p: f64 },
    #[error("law expects {expected} agents, snapshot has {got}")]
    WrongAgentCount { expected: usize, got: usize },
    #[error("agent {agent}: {message}")]
    Custom { agent: usize, message: String },
}

/// The double-integrator view of one agent that laws exchange.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentAbstractState {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Acceleration command for one agent in `{E}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AccelCommand {
    pub accel: Vec3,
}

impl AccelCommand {
    pub const ZERO: AccelCommand = AccelCommand { accel: Vec3::ZERO };
}

/// Parameters of the linear consensus law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusParams {
    /// Velocity damping, 1/s. Positive.
    pub damping: f64,
    /// Leader agent (0-based), or `None` for the leaderless case in which
    /// every agent runs the follower law.
    pub leader: Option<usize>,
}

/// Which magnitude the bang-bang law applies. The switching function always
/// uses the relative bound; the applied magnitude is configurable because the
/// worst-case-parent time guarantee corresponds to the relative bound while
/// the full bound converges faster against a passive parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MinMaxMagnitude {
    /// Apply the child's own bound, `beta_c`.
    #[default]
    Full,
    /// Apply the relative bound, `beta_c - beta_p`.
    Relative,
}

/// Parameters of the min-max time bang-bang law.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxParams {
    /// Per-agent input bounds, m/s^2. Along every tree edge the child bound
    /// must strictly exceed the parent bound.
    pub bounds: Vec<f64>,
    pub tree: SpanningTree,
    /// Switching-surface half-width; inside it the sliding hold replaces the
    /// raw sign to avoid chatter under discrete ticks.
    pub deadband: f64,
    pub magnitude: MinMaxMagnitude,
}

impl MinMaxParams {
    pub fn validate(&self) -> Result<(), LawError> {
        for (child, parent) in self.tree.edges() {
            let (bc, bp) = (self.bounds[child], self.bounds[parent]);
            if bc <= bp {
                return Err(LawError::InvalidBounds { child, beta_c: bc, beta_p: bp });
            }
        }
        Ok(())
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn clamp_axes(v: Vec3, bound: f64) -> Vec3 {
    Vec3::new(
        v.x.clamp(-bound, bound),
        v.y.clamp(-bound, bound),
        v.z.clamp(-bound, bound),
    )
}

/// Per-axis PD acceleration toward a target, the waypoint-navigation law.
pub fn waypoint_accel(
    state: &AgentAbstractState,
    target: Vec3,
    target_vel: Vec3,
    kp: f64,
    kd: f64,
) -> Vec3 {
    Vec3::new(
        kp * (target.x - state.position.x) + kd * (target_vel.x - state.velocity.x),
        kp * (target.y - state.position.y) + kd * (target_vel.y - state.velocity.y),
        0.0,
    )
}

/// The linear consensus law for agent `i`: the weighted sum of neighbor
/// position differences minus velocity damping for followers; exactly zero
/// for the leader.
pub fn consensus_law(
    i: usize,
    states: &[AgentAbstractState],
    graph: &CommGraph,
    params: &ConsensusParams,
) -> AccelCommand {
    if params.leader == Some(i) {
        return AccelCommand::ZERO;
    }
    let mut accel = states[i].velocity.scale(-params.damping);
    for (j, weight) in graph.neighbors(i) {
        accel += (states[j].position - states[i].position).scale(weight);
    }
    AccelCommand { accel }
}

/// One axis of the bang-bang law. `dp`/`dv` are child-minus-parent state
/// differences. Outside the deadband the command is the full magnitude
/// against the sign of the switching function; inside it, a sliding hold
/// decelerates the relative velocity at the deceleration needed to track the
/// switching curve: the curve-riding rate, corrected by the in-band offset
/// so the switching function is driven to zero instead of merely held.
///
/// Note on the sign: with `s = 2(beta_c - beta_p) dp + dv |dv|`, the
/// convergent command direction is `-sign(s)`; a `+sign(s)` command drives
/// the state away from the switching curve in the double-integrator phase
/// plane. The direction here is validated against a brute-force
/// time-optimal oracle in the test suite rather than taken on faith.
pub fn minmax_axis(
    dp: f64,
    dv: f64,
    beta_c: f64,
    beta_p: f64,
    deadband: f64,
    magnitude: MinMaxMagnitude,
) -> f64 {
    let relative = beta_c - beta_p;
    let s = 2.0 * relative * dp + dv * dv * sign(dv);
    if s.abs() > deadband {
        let mag = match magnitude {
            MinMaxMagnitude::Full => beta_c,
            MinMaxMagnitude::Relative => relative,
        };
        -mag * sign(s)
    } else {
        let offset = if deadband > 0.0 { sign(dv) * s / deadband } else { 0.0 };
        let needed = relative * (1.0 + offset);
        -sign(dv) * needed.min(beta_c)
    }
}

/// The bang-bang law for one parent-child pair, evaluated independently on
/// each axis.
pub fn minmax_law(
    child: &AgentAbstractState,
    parent: &AgentAbstractState,
    beta_c: f64,
    beta_p: f64,
    deadband: f64,
    magnitude: MinMaxMagnitude,
) -> Result<AccelCommand, LawError> {
    if beta_c <= beta_p {
        return Err(LawError::InvalidBounds { child: 0, beta_c, beta_p });
    }
    let dp = child.position - parent.position;
    let dv = child.velocity - parent.velocity;
    Ok(AccelCommand {
        accel: Vec3::new(
            minmax_axis(dp.x, dv.x, beta_c, beta_p, deadband, magnitude),
            minmax_axis(dp.y, dv.y, beta_c, beta_p, deadband, magnitude),
            minmax_axis(dp.z, dv.z, beta_c, beta_p, deadband, magnitude),
        ),
    })
}

/// Horizontal waypoint sequencer: the active waypoint advances once the agent
/// is inside the capture radius at low speed.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointTracker {
    waypoints: Vec<(f64, f64)>,
    current: usize,
    pub capture_radius: f64,
    pub capture_speed: f64,
}

impl WaypointTracker {
    pub fn new(waypoints: Vec<(f64, f64)>) -> Self {
        WaypointTracker {
            waypoints,
            current: 0,
            capture_radius: 0.1,
            capture_speed: 0.2,
        }
    }

    pub fn current_index(&self) -> usize {
        self.current
    }

    /// Advance past captured waypoints and return the active target, or
    /// `None` when there are no waypoints at all.
    pub fn target(&mut self, state: &AgentAbstractState) -> Option<(f64, f64)> {
        loop {
            let &(wx, wy) = self.waypoints.get(self.current)?;
            let dist = ((state.position.x - wx).powi(2) + (state.position.y - wy).powi(2)).sqrt();
            let speed = (state.velocity.x.powi(2) + state.velocity.y.powi(2)).sqrt();
            let captured = dist < self.capture_radius && speed < self.capture_speed;
            if captured && self.current + 1 < self.waypoints.len() {
                self.current += 1;
            } else {
                return Some((wx, wy));
            }
        }
    }
}

/// A distributed law evaluated once per control tick over a state snapshot.
/// Custom laws plug in by implementing this trait and registering under a
/// name in the scenario engine's law registry.
pub trait OuterLaw: Send {
    fn tick(&mut self, states: &[AgentAbstractState]) -> Result<Vec<AccelCommand>, LawError>;
}

/// Waypoint navigation: every agent runs the same waypoint list through its
/// own tracker.
pub struct WaypointLaw {
    pub kp: f64,
    pub kd: f64,
    /// Per-axis command clamp, m/s^2.
    pub clamp: f64,
    trackers: Vec<WaypointTracker>,
}

impl WaypointLaw {
    pub fn new(kp: f64, kd: f64, clamp: f64, waypoints: Vec<(f64, f64)>, agents: usize) -> Self {
        WaypointLaw {
            kp,
            kd,
            clamp,
            trackers: (0..agents).map(|_| WaypointTracker::new(waypoints.clone())).collect(),
        }
    }

    pub fn tracker(&self, agent: usize) -> &WaypointTracker {
        &self.trackers[agent]
    }
}

impl OuterLaw for WaypointLaw {
    fn tick(&mut self, states: &[AgentAbstractState]) -> Result<Vec<AccelCommand>, LawError> {
        if states.len() != self.trackers.len() {
            return Err(LawError::WrongAgentCount { expected: self.trackers.len(), got: states.len() });
        }
        Ok(states
            .iter()
            .zip(self.trackers.iter_mut())
            .map(|(state, tracker)| match tracker.target(state) {
                Some((wx, wy)) => {
                    let a = waypoint_accel(state, Vec3::new(wx, wy, 0.0), Vec3::ZERO, self.kp, self.kd);
                    AccelCommand { accel: clamp_axes(a, self.clamp) }
                }
                None => AccelCommand::ZERO,
            })
            .collect())
    }
}

/// Leaderless or leader-follower linear consensus over a communication graph.
pub struct ConsensusLaw {
    pub graph: CommGraph,
    pub params: ConsensusParams,
    /// Per-axis command clamp, m/s^2.
    pub clamp: f64,
}

impl OuterLaw for ConsensusLaw {
    fn tick(&mut self, states: &[AgentAbstractState]) -> Result<Vec<AccelCommand>, LawError> {
        if states.len() != self.graph.agent_count() {
            return Err(LawError::WrongAgentCount {
                expected: self.graph.agent_count(),
                got: states.len(),
            });
        }
        Ok((0..states.len())
            .map(|i| {
                let cmd = consensus_law(i, states, &self.graph, &self.params);
                AccelCommand { accel: clamp_axes(cmd.accel, self.clamp) }
            })
            .collect())
    }
}

/// Min-max time consensus along a spanning tree: every non-root agent runs
/// the bang-bang law against its tree parent; the root applies zero input by
/// default or follows its own waypoint list when one is configured.
pub struct MinMaxLaw {
    pub params: MinMaxParams,
    root_tracker: Option<WaypointTracker>,
    root_gains: (f64, f64),
}

impl MinMaxLaw {
    pub fn new(params: MinMaxParams) -> Result<Self, LawError> {
        params.validate()?;
        Ok(MinMaxLaw { params, root_tracker: None, root_gains: (1.0, 1.0) })
    }

    /// Give the root a waypoint list to follow instead of zero input.
    pub fn with_root_waypoints(mut self, waypoints: Vec<(f64, f64)>, kp: f64, kd: f64) -> Self {
        self.root_tracker = Some(WaypointTracker::new(waypoints));
        self.root_gains = (kp, kd);
        self
    }
}

impl OuterLaw for MinMaxLaw {
    fn tick(&mut self, states: &[AgentAbstractState]) -> Result<Vec<AccelCommand>, LawError> {
        let n = self.params.tree.len();
        if states.len() != n {
            return Err(LawError::WrongAgentCount { expected: n, got: states.len() });
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            match self.params.tree.parent[i] {
                None => {
                    let bound = self.params.bounds[i];
                    let cmd = match &mut self.root_tracker {
                        Some(tracker) => match tracker.target(&states[i]) {
                            Some((wx, wy)) => {
                                let (kp, kd) = self.root_gains;
                                let a = waypoint_accel(
                                    &states[i],
                                    Vec3::new(wx, wy, 0.0),
                                    Vec3::ZERO,
                                    kp,
                                    kd,
                                );
                                AccelCommand { accel: clamp_axes(a, bound) }
                            }
                            None => AccelCommand::ZERO,
                        },
                        None => AccelCommand::ZERO,
                    };
                    out.push(cmd);
                }
                Some(p) => {
                    let cmd = minmax_law(
                        &states[i],
                        &states[p],
                        self.params.bounds[i],
                        self.params.bounds[p],
                        self.params.deadband,
                        self.params.magnitude,
                    )
                    .map_err(|e| match e {
                        LawError::InvalidBounds { beta_c, beta_p, .. } => {
                            LawError::InvalidBounds { child: i, beta_c, beta_p }
                        }
                        other => other,
                    })?;
                    out.push(cmd);
                }
            }
        }
        Ok(out)
    }
}

/// Evaluate a law for every agent against one frozen snapshot.
pub fn run_law_tick(
    law: &mut dyn OuterLaw,
    states: &[AgentAbstractState],
) -> Result<Vec<AccelCommand>, LawError> {
    let commands = law.tick(states)?;
    debug_assert_eq!(commands.len(), states.len());
    Ok(commands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar_state(p: f64, v: f64) -> AgentAbstractState {
        AgentAbstractState {
            position: Vec3::new(p, 0.0, 0.0),
            velocity: Vec3::new(v, 0.0, 0.0),
        }
    }

    #[test]
    fn consensus_fixed_point_is_zero() {
        let g = CommGraph::undirected_unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let params = ConsensusParams { damping: 1.0, leader: None };
        let state = AgentAbstractState {
            position: Vec3::new(2.0, -1.0, 1.0),
            velocity: Vec3::ZERO,
        };
        let states = vec![state; 4];
        for i in 0..4 {
            assert_eq!(consensus_law(i, &states, &g, &params), AccelCommand::ZERO);
        }
    }

    #[test]
    fn consensus_two_agents_direct() {
        let g = CommGraph::undirected_unit(2, &[(0, 1)]).unwrap();
        let params = ConsensusParams { damping: 1.0, leader: None };
        let states = vec![scalar_state(0.0, 0.0), scalar_state(1.0, 0.0)];
        let f0 = consensus_law(0, &states, &g, &params);
        let f1 = consensus_law(1, &states, &g, &params);
        assert!((f0.accel.x - 1.0).abs() < 1e-15);
        assert!((f1.accel.x + 1.0).abs() < 1e-15);
    }

    #[test]
    fn consensus_leader_is_unforced() {
        let edges: Vec<(usize, usize)> = (0..9).map(|i| (i, i + 1)).collect();
        let g = CommGraph::undirected_unit(10, &edges).unwrap();
        // Agent 4 in the 1-based numbering is index 3 here.
        let params = ConsensusParams { damping: 1.0, leader: Some(3) };
        let states: Vec<AgentAbstractState> =
            (0..10).map(|i| scalar_state(i as f64 * 2.0, 0.5)).collect();
        assert_eq!(consensus_law(3, &states, &g, &params), AccelCommand::ZERO);
        assert_ne!(consensus_law(2, &states, &g, &params), AccelCommand::ZERO);
    }

    #[test]
    fn minmax_identical_states() {
        let s = scalar_state(1.0, 0.5);
        let cmd = minmax_law(&s, &s, 2.0, 1.0, 0.05, MinMaxMagnitude::Full).unwrap();
        assert_eq!(cmd, AccelCommand::ZERO);
    }

    #[test]
    fn minmax_drives_toward_parent() {
        // dp = 1, dv = 0, beta_c = 2, beta_p = 1: s = 2 > 0, command -2.
        let child = scalar_state(1.0, 0.0);
        let parent = scalar_state(0.0, 0.0);
        let cmd = minmax_law(&child, &parent, 2.0, 1.0, 0.05, MinMaxMagnitude::Full).unwrap();
        assert_eq!(cmd.accel.x, -2.0);
    }

    #[test]
    fn minmax_relative_magnitude() {
        let child = scalar_state(1.0, 0.0);
        let parent = scalar_state(0.0, 0.0);
        let cmd = minmax_law(&child, &parent, 2.0, 1.0, 0.05, MinMaxMagnitude::Relative).unwrap();
        assert_eq!(cmd.accel.x, -1.0);
    }

    #[test]
    fn minmax_on_curve_uses_sliding_hold() {
        // s = 0 exactly with dv = -1: deadband branch, |output| <= beta_c.
        let child = scalar_state(0.5, -1.0);
        let parent = scalar_state(0.0, 0.0);
        let cmd = minmax_law(&child, &parent, 2.0, 1.0, 0.05, MinMaxMagnitude::Full).unwrap();
        assert_eq!(cmd.accel.x, 1.0);
        assert!(cmd.accel.x.abs() <= 2.0);
    }

    #[test]
    fn minmax_rejects_bad_bounds() {
        let s = scalar_state(0.0, 0.0);
        assert!(matches!(
            minmax_law(&s, &s, 1.0, 1.0, 0.05, MinMaxMagnitude::Full),
            Err(LawError::InvalidBounds { .. })
        ));
    }

    #[test]
    fn waypoint_at_target_at_rest() {
        let mut law = WaypointLaw::new(1.0, 1.0, 3.0, vec![(2.0, 3.0)], 1);
        let states = vec![AgentAbstractState {
            position: Vec3::new(2.0, 3.0, 1.0),
            velocity: Vec3::ZERO,
        }];
        let cmds = law.tick(&states).unwrap();
        assert_eq!(cmds[0], AccelCommand::ZERO);
    }

    #[test]
    fn waypoint_unit_gain_substitution() {
        let mut law = WaypointLaw::new(1.0, 1.0, 3.0, vec![(1.0, 0.0)], 1);
        let states = vec![AgentAbstractState::default()];
        let cmds = law.tick(&states).unwrap();
        assert!((cmds[0].accel - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn waypoint_advances_on_capture() {
        let mut tracker = WaypointTracker::new(vec![(0.0, 0.0), (5.0, 0.0)]);
        let far = scalar_state(3.0, 0.0);
        assert_eq!(tracker.target(&far), Some((0.0, 0.0)));
        let near_fast = scalar_state(0.05, 1.0);
        assert_eq!(tracker.target(&near_fast), Some((0.0, 0.0)));
        let near_slow = scalar_state(0.05, 0.1);
        assert_eq!(tracker.target(&near_slow), Some((5.0, 0.0)));
        assert_eq!(tracker.current_index(), 1);
        // Last waypoint is held forever.
        let at_last = scalar_state(5.0, 0.0);
        assert_eq!(tracker.target(&at_last), Some((5.0, 0.0)));
    }

    #[test]
    fn run_tick_consensus_at_consensus_is_zero() {
        let g = CommGraph::undirected_unit(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut law = ConsensusLaw {
            graph: g,
            params: ConsensusParams { damping: 1.0, leader: None },
            clamp: 3.0,
        };
        let states = vec![scalar_state(1.5, 0.0); 4];
        let cmds = run_law_tick(&mut law, &states).unwrap();
        assert!(cmds.iter().all(|c| *c == AccelCommand::ZERO));
    }

    #[test]
    fn run_tick_minmax_root_is_unforced() {
        let g = CommGraph::undirected_unit(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let tree = g.extract_spanning_tree(0).unwrap();
        let params = MinMaxParams {
            bounds: vec![1.0, 2.0, 2.0, 2.0],
            tree,
            deadband: 0.05,
            magnitude: MinMaxMagnitude::Full,
        };
        let mut law = MinMaxLaw::new(params).unwrap();
        let states: Vec<AgentAbstractState> =
            (0..4).map(|i| scalar_state(i as f64, -0.3)).collect();
        let cmds = run_law_tick(&mut law, &states).unwrap();
        assert_eq!(cmds[0], AccelCommand::ZERO);
        for cmd in &cmds[1..] {
            assert!(cmd.accel.x.abs() <= 2.0);
        }
    }

    #[test]
    fn snapshot_commands_are_order_independent() {
        let g = CommGraph::undirected_unit(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let params = ConsensusParams { damping: 1.0, leader: None };
        let states: Vec<AgentAbstractState> = (0..5)
            .map(|i| AgentAbstractState {
                position: Vec3::new(i as f64, -(i as f64) * 0.5, 1.0),
                velocity: Vec3::new(0.1 * i as f64, 0.0, 0.0),
            })
            .collect();
        let forward: Vec<AccelCommand> =
            (0..5).map(|i| consensus_law(i, &states, &g, &params)).collect();
        let mut reverse: Vec<AccelCommand> =
            (0..5).rev().map(|i| consensus_law(i, &states, &g, &params)).collect();
        reverse.reverse();
        assert_eq!(forward, reverse);
    }

    #[test]
    fn minmax_law_validates_tree_bounds_up_front() {
        let g = CommGraph::undirected_unit(3, &[(0, 1), (1, 2)]).unwrap();
        let tree = g.extract_spanning_tree(0).unwrap();
        let params = MinMaxParams {
            bounds: vec![1.0, 2.0, 1.5],
            tree,
            deadband: 0.05,
            magnitude: MinMaxMagnitude::Full,
        };
        assert!(matches!(
            MinMaxLaw::new(params),
            Err(LawError::InvalidBounds { child: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn consensus_commands_translation_invariant(
            shift_x in -50.0f64..50.0,
            shift_y in -50.0f64..50.0,
            positions in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4),
        ) {
            let g = CommGraph::undirected_unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
            let params = ConsensusParams { damping: 1.0, leader: None };
            let shift = Vec3::new(shift_x, shift_y, 0.0);
            let base: Vec<AgentAbstractState> = positions
                .iter()
                .map(|&(x, y)| AgentAbstractState {
                    position: Vec3::new(x, y, 1.0),
                    velocity: Vec3::new(0.3, -0.2, 0.0),
                })
                .collect();
            let shifted: Vec<AgentAbstractState> = base
                .iter()
                .map(|s| AgentAbstractState { position: s.position + shift, ..*s })
                .collect();
            for i in 0..4 {
                let a = consensus_law(i, &base, &g, &params);
                let b = consensus_law(i, &shifted, &g, &params);
                prop_assert!((a.accel - b.accel).norm() < 1e-9);
            }
        }

        #[test]
        fn minmax_never_exceeds_child_bound(
            dp in -10.0f64..10.0,
            dv in -5.0f64..5.0,
            beta_p in 0.0f64..2.0,
            extra in 0.1f64..3.0,
        ) {
            let beta_c = beta_p + extra;
            let out = minmax_axis(dp, dv, beta_c, beta_p, 0.05, MinMaxMagnitude::Full);
            prop_assert!(out.abs() <= beta_c + 1e-15);
            let s = 2.0 * (beta_c - beta_p) * dp + dv * dv * sign(dv);
            if s.abs() > 0.05 {
                prop_assert_eq!(out.abs(), beta_c);
            }
        }
    }
}
