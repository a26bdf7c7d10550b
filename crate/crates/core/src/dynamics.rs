//! Rigid-body quadcopter plant: rotor thrust model, mixer matrix, Newton
//! translational dynamics with linear drag, Euler rotational dynamics, and a
//! fixed-timestep semi-implicit integrator.
//!
//! Sign conventions: `{E}` is z-up. Gravity acts along `-z` in `{E}`; the
//! total rotor thrust `T >= 0` acts along the body "up" direction, which at
//! level attitude is `+z` in `{E}`. The mixer's bookkeeping of the thrust row
//! sign stays internal; callers only ever see the non-negative magnitude.

use crate::frames::{thrust_direction_earth, wrap_angle, Attitude, Vec3};
use thiserror::Error;

/// Tolerance below which a negative solved rotor speed square is treated as
/// rounding noise rather than an infeasible command.
pub const EPS_ALLOC: f64 = 1e-9;

/// Any plant state component beyond this magnitude aborts the step.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DynamicsError {
    /// The commanded wrench solves to a rotor speed square more negative than
    /// the allocation tolerance. Callers scale torques toward zero and retry.
    #[error("infeasible wrench command: rotor {rotor} solves to squared speed {squared:.6e}")]
    InfeasibleCommand { rotor: usize, squared: f64 },
    /// A state component left the sane numeric range.
    #[error("numeric divergence in {component}: |value| = {value:.3e} exceeds {DIVERGENCE_LIMIT:.0e}")]
    NumericDivergence { component: &'static str, value: f64 },
}

/// Physical constants of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadParams {
    /// Mass, kg.
    pub mass: f64,
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
    /// 3x3 inertia matrix, kg m^2. Symmetric positive definite.
    pub inertia: [[f64; 3]; 3],
    /// Lift constant b: thrust per squared rotor speed, N s^2.
    pub lift_coeff: f64,
    /// Reaction torque constant k, N m s^2.
    pub torque_coeff: f64,
    /// Arm length d from center to rotor, m.
    pub arm_len: f64,
    /// Diagonal of the aerodynamic friction matrix, N s/m.
    pub drag_diag: Vec3,
    /// Rotor speed saturation, rad/s.
    pub rotor_max: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams {
            mass: 1.5,
            gravity: 9.81,
            inertia: [
                [0.0347, 0.0, 0.0],
                [0.0, 0.0459, 0.0],
                [0.0, 0.0, 0.0977],
            ],
            lift_coeff: 1e-5,
            torque_coeff: 2e-7,
            arm_len: 0.2,
            drag_diag: Vec3::new(0.1, 0.1, 0.15),
            rotor_max: 1200.0,
        }
    }
}

impl QuadParams {
    /// Thrust that balances the weight.
    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Largest total thrust the four saturated rotors can produce.
    pub fn max_thrust(&self) -> f64 {
        4.0 * self.lift_coeff * self.rotor_max * self.rotor_max
    }

    /// Rotor speed at which four equal rotors hover.
    pub fn hover_rotor_speed(&self) -> f64 {
        (self.hover_thrust() / (4.0 * self.lift_coeff)).sqrt()
    }
}

/// Angular speeds of the four rotors, rad/s, each in `[0, rotor_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotorSpeeds(pub [f64; 4]);

impl RotorSpeeds {
    pub fn uniform(speed: f64) -> Self {
        RotorSpeeds([speed; 4])
    }
}

/// Total thrust magnitude plus the three body torques.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WrenchCommand {
    /// Total thrust magnitude, N, non-negative, along the body up direction.
    pub thrust: f64,
    /// Body torques (roll, pitch, yaw axes), N m.
    pub torque: Vec3,
}

impl WrenchCommand {
    pub fn hover(params: &QuadParams) -> Self {
        WrenchCommand { thrust: params.hover_thrust(), torque: Vec3::ZERO }
    }
}

/// Full plant state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadState {
    /// Position in `{E}`, m.
    pub position: Vec3,
    /// Velocity in `{E}`, m/s.
    pub velocity: Vec3,
    pub attitude: Attitude,
    /// Body angular rates (roll, pitch, yaw axes), rad/s.
    pub body_rates: Vec3,
    pub rotors: RotorSpeeds,
}

impl QuadState {
    /// At rest at `position`, level, rotors spinning at hover speed.
    pub fn at_rest(position: Vec3, params: &QuadParams) -> Self {
        QuadState {
            position,
            velocity: Vec3::ZERO,
            attitude: Attitude::default(),
            body_rates: Vec3::ZERO,
            rotors: RotorSpeeds::uniform(params.hover_rotor_speed()),
        }
    }
}

/// Thrust of a single rotor: `b * speed^2`.
pub fn rotor_thrust(speed: f64, lift_coeff: f64) -> f64 {
    lift_coeff * speed * speed
}

/// Map rotor speeds to the produced wrench. Rotors 1 and 3 sit on the body
/// x-axis (pitch pair), rotors 2 and 4 on the y-axis (roll pair); rotors 1
/// and 3 spin opposite to 2 and 4, so their reaction torques sign-alternate.
pub fn mixer_forward(rotors: RotorSpeeds, params: &QuadParams) -> WrenchCommand {
    let sq: Vec<f64> = rotors.0.iter().map(|w| w * w).collect();
    let b = params.lift_coeff;
    let d = params.arm_len;
    let k = params.torque_coeff;
    WrenchCommand {
        thrust: b * (sq[0] + sq[1] + sq[2] + sq[3]),
        torque: Vec3::new(
            d * b * (sq[3] - sq[1]),
            d * b * (sq[0] - sq[2]),
            k * (sq[0] + sq[2] - sq[1] - sq[3]),
        ),
    }
}

/// Result of inverting the mixer: speeds plus a flag recording whether the
/// rotor saturation clamp engaged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub rotors: RotorSpeeds,
    pub saturated: bool,
}

/// Solved rotor speed squares for a wrench, before any clamping.
fn solve_squares(cmd: &WrenchCommand, params: &QuadParams) -> [f64; 4] {
    let b = params.lift_coeff;
    let d = params.arm_len;
    let k = params.torque_coeff;
    let base = cmd.thrust / (4.0 * b);
    let tx = cmd.torque.x / (2.0 * d * b);
    let ty = cmd.torque.y / (2.0 * d * b);
    let tz = cmd.torque.z / (4.0 * k);
    [base + ty + tz, base - tx - tz, base - ty + tz, base + tx - tz]
}

/// Invert the mixer: wrench to rotor speeds.
///
/// Negative solved squares beyond [`EPS_ALLOC`] signal an infeasible command;
/// the caller is expected to scale torques toward zero (keeping thrust) and
/// retry, which [`allocate`] does.
pub fn mixer_inverse(cmd: &WrenchCommand, params: &QuadParams) -> Result<Allocation, DynamicsError> {
    let squares = solve_squares(cmd, params);
    for (i, &s) in squares.iter().enumerate() {
        if s < -EPS_ALLOC {
            return Err(DynamicsError::InfeasibleCommand { rotor: i + 1, squared: s });
        }
    }
    let mut saturated = false;
    let mut speeds = [0.0; 4];
    for (i, &s) in squares.iter().enumerate() {
        let w = s.max(0.0).sqrt();
        if w > params.rotor_max {
            saturated = true;
            speeds[i] = params.rotor_max;
        } else {
            speeds[i] = w;
        }
    }
    Ok(Allocation { rotors: RotorSpeeds(speeds), saturated })
}

/// Allocate a wrench to rotor speeds, scaling all three torques uniformly
/// toward zero (thrust has priority) until the allocation is feasible.
pub fn allocate(cmd: &WrenchCommand, params: &QuadParams) -> Allocation {
    match mixer_inverse(cmd, params) {
        Ok(a) => a,
        Err(_) => {
            // Squares are base + gamma * c_i with c_i the torque share; the
            // largest feasible gamma puts the worst rotor exactly at zero.
            let base = (cmd.thrust / (4.0 * params.lift_coeff)).max(0.0);
            let zero_torque = WrenchCommand { thrust: cmd.thrust, torque: Vec3::ZERO };
            let shares = solve_squares(cmd, params).map(|s| s - cmd.thrust / (4.0 * params.lift_coeff));
            let mut gamma: f64 = 1.0;
            for &c in &shares {
                if c < 0.0 {
                    gamma = gamma.min(base / -c);
                }
            }
            let scaled = WrenchCommand { thrust: cmd.thrust, torque: cmd.torque.scale(gamma) };
            let alloc = mixer_inverse(&scaled, params)
                .or_else(|_| mixer_inverse(&zero_torque, params))
                .expect("zero-torque allocation is always feasible");
            Allocation { saturated: true, ..alloc }
        }
    }
}

/// Translational acceleration in `{E}` per the Newton dynamics:
/// gravity, thrust rotated from the body frame, and linear drag.
pub fn translational_derivative(state: &QuadState, thrust: f64, params: &QuadParams) -> Vec3 {
    let up = thrust_direction_earth(state.attitude);
    let drag = Vec3::new(
        params.drag_diag.x * state.velocity.x,
        params.drag_diag.y * state.velocity.y,
        params.drag_diag.z * state.velocity.z,
    );
    Vec3::new(0.0, 0.0, -params.gravity) + up.scale(thrust / params.mass) - drag.scale(1.0 / params.mass)
}

fn mat_vec(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// Solve `J x = rhs` by the adjugate; J is positive definite by invariant.
fn solve_inertia(j: &[[f64; 3]; 3], rhs: Vec3) -> Vec3 {
    let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    let adj = [
        [
            j[1][1] * j[2][2] - j[1][2] * j[2][1],
            j[0][2] * j[2][1] - j[0][1] * j[2][2],
            j[0][1] * j[1][2] - j[0][2] * j[1][1],
        ],
        [
            j[1][2] * j[2][0] - j[1][0] * j[2][2],
            j[0][0] * j[2][2] - j[0][2] * j[2][0],
            j[0][2] * j[1][0] - j[0][0] * j[1][2],
        ],
        [
            j[1][0] * j[2][1] - j[1][1] * j[2][0],
            j[0][1] * j[2][0] - j[0][0] * j[2][1],
            j[0][0] * j[1][1] - j[0][1] * j[1][0],
        ],
    ];
    mat_vec(&adj, rhs).scale(1.0 / det)
}

/// Body angular acceleration per the Euler equation:
/// `J^-1 (-omega x J omega + torque)`.
pub fn rotational_derivative(state: &QuadState, torque: Vec3, params: &QuadParams) -> Vec3 {
    let omega = state.body_rates;
    let gyro = omega.cross(mat_vec(&params.inertia, omega));
    solve_inertia(&params.inertia, torque - gyro)
}

fn check_finite(value: f64, component: &'static str) -> Result<(), DynamicsError> {
    if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT {
        return Err(DynamicsError::NumericDivergence { component, value });
    }
    Ok(())
}

/// Advance the plant by one semi-implicit Euler step.
///
/// The wrench is first allocated to rotor speeds (scaling torques if
/// infeasible, clamping at `rotor_max`), then the wrench the rotors actually
/// produce drives the dynamics. Velocity is updated before position and body
/// rates before attitude; attitude integrates body rates directly, which is
/// the small-angle Euler-rate approximation the controller's tilt clamp keeps
/// valid.
pub fn step_plant(
    state: &QuadState,
    cmd: &WrenchCommand,
    dt: f64,
    params: &QuadParams,
) -> Result<QuadState, DynamicsError> {
    let alloc = allocate(cmd, params);
    let actual = mixer_forward(alloc.rotors, params);

    let accel = translational_derivative(state, actual.thrust, params);
    let velocity = state.velocity + accel.scale(dt);
    let position = state.position + velocity.scale(dt);

    let ang_accel = rotational_derivative(state, actual.torque, params);
    let body_rates = state.body_rates + ang_accel.scale(dt);
    let attitude = Attitude {
        roll: state.attitude.roll + body_rates.x * dt,
        pitch: state.attitude.pitch + body_rates.y * dt,
        yaw: wrap_angle(state.attitude.yaw + body_rates.z * dt),
    };

    for (v, name) in [
        (position.x, "position.x"),
        (position.y, "position.y"),
        (position.z, "position.z"),
        (velocity.x, "velocity.x"),
        (velocity.y, "velocity.y"),
        (velocity.z, "velocity.z"),
        (attitude.roll, "attitude.roll"),
        (attitude.pitch, "attitude.pitch"),
        (body_rates.x, "body_rates.x"),
        (body_rates.y, "body_rates.y"),
        (body_rates.z, "body_rates.z"),
    ] {
        check_finite(v, name)?;
    }

    Ok(QuadState { position, velocity, attitude, body_rates, rotors: alloc.rotors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_params() -> QuadParams {
        QuadParams {
            lift_coeff: 1.0,
            torque_coeff: 1.0,
            arm_len: 1.0,
            rotor_max: 1e9,
            ..QuadParams::default()
        }
    }

    #[test]
    fn rotor_thrust_zero() {
        assert_eq!(rotor_thrust(0.0, 1e-5), 0.0);
    }

    #[test]
    fn rotor_thrust_direct() {
        assert!((rotor_thrust(800.0, 1e-5) - 6.4).abs() < 1e-12);
    }

    #[test]
    fn rotor_thrust_monotone() {
        let mut prev = 0.0;
        for i in 1..100 {
            let t = rotor_thrust(i as f64 * 7.3, 1e-5);
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn mixer_forward_symmetric() {
        let p = QuadParams::default();
        let w = mixer_forward(RotorSpeeds::uniform(500.0), &p);
        assert_eq!(w.torque, Vec3::ZERO);
        assert!((w.thrust - 4.0 * p.lift_coeff * 500.0 * 500.0).abs() < 1e-12);
    }

    #[test]
    fn mixer_forward_alternating_pair() {
        // Squared speeds (1, 0, 1, 0) with b = k = d = 1.
        let p = unit_params();
        let w = mixer_forward(RotorSpeeds([1.0, 0.0, 1.0, 0.0]), &p);
        assert!((w.thrust - 2.0).abs() < 1e-15);
        assert!(w.torque.x.abs() < 1e-15);
        assert!(w.torque.y.abs() < 1e-15);
        assert!((w.torque.z - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mixer_inverse_uniform() {
        let p = unit_params();
        let cmd = WrenchCommand { thrust: 4.0, torque: Vec3::ZERO };
        let alloc = mixer_inverse(&cmd, &p).unwrap();
        for w in alloc.rotors.0 {
            assert!((w - 1.0).abs() < 1e-12);
        }
        assert!(!alloc.saturated);
    }

    #[test]
    fn mixer_inverse_hover_speed() {
        let p = QuadParams::default();
        let cmd = WrenchCommand::hover(&p);
        let alloc = mixer_inverse(&cmd, &p).unwrap();
        for w in alloc.rotors.0 {
            assert!((w - 606.5).abs() < 0.1, "hover speed {w}");
        }
    }

    #[test]
    fn mixer_inverse_rejects_infeasible() {
        let p = QuadParams::default();
        let cmd = WrenchCommand { thrust: 0.1, torque: Vec3::new(5.0, 0.0, 0.0) };
        assert!(matches!(
            mixer_inverse(&cmd, &p),
            Err(DynamicsError::InfeasibleCommand { .. })
        ));
    }

    #[test]
    fn allocate_scales_torque_keeping_thrust() {
        let p = QuadParams::default();
        let cmd = WrenchCommand { thrust: 0.1, torque: Vec3::new(5.0, -2.0, 0.3) };
        let alloc = allocate(&cmd, &p);
        assert!(alloc.saturated);
        let actual = mixer_forward(alloc.rotors, &p);
        assert!((actual.thrust - 0.1).abs() < 1e-9);
        // Scaled torque keeps its direction.
        let dot = actual.torque.dot(cmd.torque);
        assert!(dot >= 0.0);
        assert!(actual.torque.norm() <= cmd.torque.norm());
    }

    #[test]
    fn translational_hover_is_zero() {
        let p = QuadParams::default();
        let state = QuadState::at_rest(Vec3::ZERO, &p);
        let a = translational_derivative(&state, p.hover_thrust(), &p);
        assert!(a.norm() < 1e-12);
    }

    #[test]
    fn translational_free_fall() {
        let p = QuadParams { drag_diag: Vec3::ZERO, ..QuadParams::default() };
        let state = QuadState::at_rest(Vec3::ZERO, &p);
        let a = translational_derivative(&state, 0.0, &p);
        assert!((a - Vec3::new(0.0, 0.0, -p.gravity)).norm() < 1e-12);
    }

    #[test]
    fn translational_pitched_thrust() {
        // Thrust mg/cos(0.1) at pitch 0.1: vertical component cancels
        // gravity, horizontal acceleration is g tan(0.1).
        let p = QuadParams::default();
        let mut state = QuadState::at_rest(Vec3::ZERO, &p);
        state.attitude.pitch = 0.1;
        let thrust = p.hover_thrust() / 0.1f64.cos();
        let a = translational_derivative(&state, thrust, &p);
        assert!((a.x - p.gravity * 0.1f64.tan()).abs() < 1e-12);
        assert!((a.x - 0.984).abs() < 1e-3);
        assert!(a.y.abs() < 1e-12);
        assert!(a.z.abs() < 1e-12);
    }

    #[test]
    fn rotational_rest_is_zero() {
        let p = QuadParams::default();
        let state = QuadState::at_rest(Vec3::ZERO, &p);
        assert_eq!(rotational_derivative(&state, Vec3::ZERO, &p), Vec3::ZERO);
    }

    #[test]
    fn rotational_diagonal_inertia() {
        let p = QuadParams {
            inertia: [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 4.0]],
            ..QuadParams::default()
        };
        let state = QuadState::at_rest(Vec3::ZERO, &p);
        let dw = rotational_derivative(&state, Vec3::new(1.0, 0.0, 0.0), &p);
        assert!((dw - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rotational_gyroscopic_term() {
        // J = diag(1,2,3), omega = (1,1,1): hand evaluation gives
        // J^-1(-omega x J omega) = (-1, 1, -1/3). Cross-checked against an
        // independent dense solve.
        let j = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]];
        let p = QuadParams { inertia: j, ..QuadParams::default() };
        let mut state = QuadState::at_rest(Vec3::ZERO, &p);
        state.body_rates = Vec3::new(1.0, 1.0, 1.0);
        let dw = rotational_derivative(&state, Vec3::ZERO, &p);
        assert!((dw - Vec3::new(-1.0, 1.0, -1.0 / 3.0)).norm() < 1e-12);

        let jm = nalgebra::Matrix3::from_row_slice(&[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]);
        let w = nalgebra::Vector3::new(1.0, 1.0, 1.0);
        let rhs = -w.cross(&(jm * w));
        let oracle = jm.lu().solve(&rhs).unwrap();
        assert!((dw.x - oracle.x).abs() < 1e-12);
        assert!((dw.y - oracle.y).abs() < 1e-12);
        assert!((dw.z - oracle.z).abs() < 1e-12);
    }

    #[test]
    fn step_hover_holds_position() {
        let p = QuadParams::default();
        let mut state = QuadState::at_rest(Vec3::new(0.0, 0.0, 1.0), &p);
        let cmd = WrenchCommand::hover(&p);
        for _ in 0..5000 {
            state = step_plant(&state, &cmd, 1e-3, &p).unwrap();
        }
        assert!((state.position - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn step_hover_ten_seconds_fixed_point() {
        let p = QuadParams::default();
        let start = Vec3::new(0.3, -0.2, 2.0);
        let mut state = QuadState::at_rest(start, &p);
        let cmd = WrenchCommand::hover(&p);
        for _ in 0..10_000 {
            state = step_plant(&state, &cmd, 1e-3, &p).unwrap();
            assert!((state.position - start).norm() < 1e-6);
        }
    }

    fn free_fall_error(dt: f64) -> f64 {
        let p = QuadParams { drag_diag: Vec3::ZERO, ..QuadParams::default() };
        let mut state = QuadState::at_rest(Vec3::ZERO, &p);
        let cmd = WrenchCommand { thrust: 0.0, torque: Vec3::ZERO };
        let steps = (1.0 / dt).round() as usize;
        for _ in 0..steps {
            state = step_plant(&state, &cmd, dt, &p).unwrap();
        }
        (state.position.z - (-0.5 * p.gravity)).abs()
    }

    #[test]
    fn step_free_fall_matches_parabola() {
        let err = free_fall_error(1e-3);
        assert!(err / (0.5 * 9.81) < 0.005, "relative error {}", err / (0.5 * 9.81));
    }

    #[test]
    fn step_free_fall_first_order_convergence() {
        let e1 = free_fall_error(1e-3);
        let e2 = free_fall_error(5e-4);
        let ratio = e1 / e2;
        assert!((ratio - 2.0).abs() < 0.1, "convergence ratio {ratio}");
    }

    #[test]
    fn step_terminal_velocity() {
        // Linear z-drag fall approaches -m g / beta.
        let beta = 1.5;
        let p = QuadParams {
            drag_diag: Vec3::new(0.0, 0.0, beta),
            ..QuadParams::default()
        };
        let mut state = QuadState::at_rest(Vec3::ZERO, &p);
        let cmd = WrenchCommand { thrust: 0.0, torque: Vec3::ZERO };
        for _ in 0..20_000 {
            state = step_plant(&state, &cmd, 1e-3, &p).unwrap();
        }
        let v_term = -p.mass * p.gravity / beta;
        assert!((state.velocity.z - v_term).abs() < 1e-4, "v_z = {}", state.velocity.z);
    }

    #[test]
    fn step_conserves_horizontal_velocity_without_drag() {
        let p = QuadParams { drag_diag: Vec3::ZERO, ..QuadParams::default() };
        let mut state = QuadState::at_rest(Vec3::ZERO, &p);
        state.velocity = Vec3::new(1.25, -0.75, 0.0);
        let cmd = WrenchCommand { thrust: 0.0, torque: Vec3::ZERO };
        for _ in 0..1000 {
            let next = step_plant(&state, &cmd, 1e-3, &p).unwrap();
            assert_eq!(next.velocity.x, state.velocity.x);
            assert_eq!(next.velocity.y, state.velocity.y);
            state = next;
        }
    }

    #[test]
    fn step_detects_divergence() {
        let p = QuadParams::default();
        let mut state = QuadState::at_rest(Vec3::ZERO, &p);
        state.velocity = Vec3::new(2e9, 0.0, 0.0);
        let cmd = WrenchCommand::hover(&p);
        assert!(matches!(
            step_plant(&state, &cmd, 1e-3, &p),
            Err(DynamicsError::NumericDivergence { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn mixer_round_trip(
            thrust in 0.5f64..50.0,
            tx in -0.2f64..0.2,
            ty in -0.2f64..0.2,
            tz in -0.05f64..0.05,
        ) {
            let p = QuadParams::default();
            let cmd = WrenchCommand { thrust, torque: Vec3::new(tx, ty, tz) };
            prop_assume!(solve_squares(&cmd, &p).iter().all(|&s| s >= 0.0));
            let alloc = mixer_inverse(&cmd, &p).unwrap();
            prop_assume!(!alloc.saturated);
            let back = mixer_forward(alloc.rotors, &p);
            let scale = thrust.max(cmd.torque.norm());
            prop_assert!((back.thrust - cmd.thrust).abs() / scale < 1e-10);
            prop_assert!((back.torque - cmd.torque).norm() / scale < 1e-10);
        }

        #[test]
        fn forward_then_inverse_recovers_rotors(
            w1 in 0.0f64..1100.0,
            w2 in 0.0f64..1100.0,
            w3 in 0.0f64..1100.0,
            w4 in 0.0f64..1100.0,
        ) {
            let p = QuadParams::default();
            let rotors = RotorSpeeds([w1, w2, w3, w4]);
            let cmd = mixer_forward(rotors, &p);
            let alloc = mixer_inverse(&cmd, &p).unwrap();
            for (orig, got) in rotors.0.iter().zip(alloc.rotors.0.iter()) {
                prop_assert!((orig - got).abs() < 1e-8, "{} vs {}", orig, got);
            }
        }
    }
}
