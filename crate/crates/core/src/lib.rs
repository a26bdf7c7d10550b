//! Multi-agent quadcopter simulation testbed.
//!
//! Each simulated vehicle is a full rigid-body quadcopter closed under a
//! cascaded PD controller that makes it behave, toward the outer control
//! layer, like a double integrator accepting acceleration commands in the
//! Earth frame. Distributed outer laws (waypoint tracking, leaderless and
//! leader-follower consensus, min-max time bang-bang consensus) run over a
//! configurable communication graph. Scenarios are described by plain-text
//! config files; runs emit CSV trajectory logs and SVG plots.

pub mod control;
pub mod dynamics;
pub mod frames;
pub mod graph;
pub mod laws;
pub mod scenario;

pub use frames::{Attitude, Vec3};
