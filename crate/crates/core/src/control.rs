//! Cascaded PD inner loops: altitude, heading, roll/pitch attitude, and
//! horizontal position, plus the small-angle map from desired acceleration to
//! desired tilt. Together they make the closed-loop vehicle track Earth-frame
//! acceleration commands like a double integrator.
//!
//! Every function here is pure in (state, setpoint, gains, params); per-agent
//! controllers hold no state and may tick concurrently across agents.

use crate::dynamics::{step_plant, DynamicsError, QuadParams, QuadState, WrenchCommand};
use crate::frames::{earth_to_bprime, wrap_angle, Vec3};
use thiserror::Error;

/// Below this thrust the tilt command is undefined and the controller holds
/// level attitude instead.
pub const MIN_TILT_THRUST: f64 = 0.1;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ControlError {
    #[error("thrust {thrust:.3} N too low to derive a tilt command (minimum {MIN_TILT_THRUST} N)")]
    ThrustTooLow { thrust: f64 },
}

/// Proportional and derivative gains of one loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
}

impl PdGains {
    pub fn new(kp: f64, kd: f64) -> Self {
        PdGains { kp, kd }
    }

    fn apply(&self, err: f64, rate_err: f64) -> f64 {
        self.kp * err + self.kd * rate_err
    }
}

/// Gains and limits of the full inner-loop stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    pub altitude: PdGains,
    pub heading: PdGains,
    pub roll: PdGains,
    pub pitch: PdGains,
    pub pos_x: PdGains,
    pub pos_y: PdGains,
    /// Rotor speed bias, rad/s. Zero selects the hover feedforward `m*g`;
    /// a positive value feeds forward the thrust of four rotors at this
    /// speed, which is the same thing at hover.
    pub rotor_bias: f64,
    /// Tilt command clamp, rad. Keeps the small-angle premise enforced.
    pub tilt_clamp: f64,
    /// Acceleration command clamp, m/s^2, applied per axis.
    pub accel_clamp: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        GainSet {
            altitude: PdGains::new(8.0, 5.0),
            heading: PdGains::new(2.0, 0.5),
            roll: PdGains::new(6.0, 1.2),
            pitch: PdGains::new(6.0, 1.2),
            pos_x: PdGains::new(1.0, 1.0),
            pos_y: PdGains::new(1.0, 1.0),
            rotor_bias: 0.0,
            tilt_clamp: 0.3,
            accel_clamp: 3.0,
        }
    }
}

/// Which field of the setpoint drives the horizontal axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetpointMode {
    /// Horizontal axes track `position` through the position loop.
    PositionHold,
    /// Horizontal axes track the outer-loop acceleration command `accel`.
    AccelCommand,
}

/// Controller setpoint. Altitude always tracks `position.z`; the heading loop
/// always tracks `yaw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub position: Vec3,
    pub velocity: Vec3,
    pub yaw: f64,
    pub yaw_rate: f64,
    /// Outer-loop acceleration command in `{E}`, used in `AccelCommand` mode.
    pub accel: Vec3,
    pub mode: SetpointMode,
}

impl Setpoint {
    pub fn position_hold(position: Vec3) -> Self {
        Setpoint {
            position,
            velocity: Vec3::ZERO,
            yaw: 0.0,
            yaw_rate: 0.0,
            accel: Vec3::ZERO,
            mode: SetpointMode::PositionHold,
        }
    }

    /// Track `accel` horizontally while holding altitude `hold_z`.
    pub fn accel_command(accel: Vec3, hold_z: f64) -> Self {
        Setpoint {
            position: Vec3::new(0.0, 0.0, hold_z),
            velocity: Vec3::ZERO,
            yaw: 0.0,
            yaw_rate: 0.0,
            accel,
            mode: SetpointMode::AccelCommand,
        }
    }
}

fn thrust_feedforward(gains: &GainSet, params: &QuadParams) -> f64 {
    if gains.rotor_bias > 0.0 {
        4.0 * params.lift_coeff * gains.rotor_bias * gains.rotor_bias
    } else {
        params.hover_thrust()
    }
}

/// Altitude PD loop: thrust from altitude error plus the weight-countering
/// bias, clamped to what the rotors can produce.
pub fn altitude_loop(state: &QuadState, sp: &Setpoint, gains: &GainSet, params: &QuadParams) -> f64 {
    let err = sp.position.z - state.position.z;
    let rate_err = sp.velocity.z - state.velocity.z;
    let t = gains.altitude.apply(err, rate_err) + thrust_feedforward(gains, params);
    t.clamp(0.0, params.max_thrust())
}

/// Heading PD loop on the yaw error, wrapped to the short way around.
pub fn heading_loop(state: &QuadState, sp: &Setpoint, gains: &GainSet) -> f64 {
    let err = wrap_angle(sp.yaw - state.attitude.yaw);
    let rate_err = sp.yaw_rate - state.body_rates.z;
    gains.heading.apply(err, rate_err)
}

/// Roll and pitch PD loops; returns the body torques `(tau_x, tau_y)`.
/// Commanded tilt rates are zero (the command is held for the tick).
pub fn attitude_loop(state: &QuadState, pitch_cmd: f64, roll_cmd: f64, gains: &GainSet) -> (f64, f64) {
    let tau_x = gains.roll.apply(roll_cmd - state.attitude.roll, -state.body_rates.x);
    let tau_y = gains.pitch.apply(pitch_cmd - state.attitude.pitch, -state.body_rates.y);
    (tau_x, tau_y)
}

/// Horizontal position PD loop. Each axis is independent and the result is
/// computed in `{E}`, clamped per axis.
pub fn position_loop(state: &QuadState, sp: &Setpoint, gains: &GainSet) -> Vec3 {
    let ax = gains
        .pos_x
        .apply(sp.position.x - state.position.x, sp.velocity.x - state.velocity.x);
    let ay = gains
        .pos_y
        .apply(sp.position.y - state.position.y, sp.velocity.y - state.velocity.y);
    let c = gains.accel_clamp;
    Vec3::new(ax.clamp(-c, c), ay.clamp(-c, c), 0.0)
}

/// Small-angle map from a desired horizontal acceleration in `{E}` to desired
/// (pitch, roll): the command is rotated into `{B'}` at the measured yaw and
/// scaled by `m/T`, then clamped to the tilt limit.
pub fn accel_to_attitude(
    accel_earth: Vec3,
    thrust: f64,
    mass: f64,
    yaw: f64,
    tilt_clamp: f64,
) -> Result<(f64, f64), ControlError> {
    if thrust <= MIN_TILT_THRUST {
        return Err(ControlError::ThrustTooLow { thrust });
    }
    let a_bp = earth_to_bprime(yaw, accel_earth);
    let pitch = (mass / thrust * a_bp.x).clamp(-tilt_clamp, tilt_clamp);
    let roll = (mass / thrust * a_bp.y).clamp(-tilt_clamp, tilt_clamp);
    Ok((pitch, roll))
}

/// One full pass of the cascade: altitude to thrust, position loop or outer
/// acceleration command to tilt to roll/pitch torques, heading to yaw torque.
/// A thrust too low for a tilt command falls back to level attitude.
pub fn controller_tick(
    state: &QuadState,
    sp: &Setpoint,
    gains: &GainSet,
    params: &QuadParams,
) -> WrenchCommand {
    let thrust = altitude_loop(state, sp, gains, params);

    let c = gains.accel_clamp;
    let accel = match sp.mode {
        SetpointMode::PositionHold => position_loop(state, sp, gains),
        SetpointMode::AccelCommand => Vec3::new(
            sp.accel.x.clamp(-c, c),
            sp.accel.y.clamp(-c, c),
            0.0,
        ),
    };

    let (pitch_cmd, roll_cmd) =
        accel_to_attitude(accel, thrust, params.mass, state.attitude.yaw, gains.tilt_clamp)
            .unwrap_or((0.0, 0.0));
    let (tau_x, tau_y) = attitude_loop(state, pitch_cmd, roll_cmd, gains);
    let tau_z = heading_loop(state, sp, gains);

    WrenchCommand { thrust, torque: Vec3::new(tau_x, tau_y, tau_z) }
}

/// Advance one agent by a control tick: run the cascade once, then hold the
/// wrench over `substeps` physics steps of `physics_dt` each. This is the
/// unit of work the scenario loop schedules per agent.
pub fn advance_agent(
    state: &QuadState,
    sp: &Setpoint,
    gains: &GainSet,
    params: &QuadParams,
    physics_dt: f64,
    substeps: u32,
) -> Result<QuadState, DynamicsError> {
    let cmd = controller_tick(state, sp, gains, params);
    let mut next = *state;
    for _ in 0..substeps {
        next = step_plant(&next, &cmd, physics_dt, params)?;
    }
    Ok(next)
}
