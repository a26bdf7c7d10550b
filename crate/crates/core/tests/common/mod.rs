//! Shared helpers for integration tests: an exact ideal double-integrator
//! stepper, a brute-force one-switch bang-bang time oracle, and a closed-loop
//! plant runner. The oracle is pure kinematics and shares no code with the
//! switching logic it checks.

#![allow(dead_code)]

use quadswarm::control::{advance_agent, GainSet, Setpoint};
use quadswarm::dynamics::{QuadParams, QuadState};
use quadswarm::frames::Vec3;

/// Ideal double integrator advanced exactly under piecewise-constant
/// acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdealAgent {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl IdealAgent {
    pub fn step(&mut self, accel: Vec3, dt: f64) {
        self.position += self.velocity.scale(dt) + accel.scale(0.5 * dt * dt);
        self.velocity += accel.scale(dt);
    }
}

/// Run one plant closed-loop for `ticks` control periods, collecting the
/// state after every tick (index 0 is the initial state).
pub fn simulate_plant(
    initial: QuadState,
    setpoint: impl Fn(usize, &QuadState) -> Setpoint,
    gains: &GainSet,
    params: &QuadParams,
    control_dt: f64,
    ticks: usize,
) -> Vec<(f64, QuadState)> {
    let substeps = (control_dt / 1e-3).round().max(1.0) as u32;
    let physics_dt = control_dt / substeps as f64;
    let mut out = Vec::with_capacity(ticks + 1);
    let mut state = initial;
    out.push((0.0, state));
    for k in 0..ticks {
        let sp = setpoint(k, &state);
        state = advance_agent(&state, &sp, gains, params, physics_dt, substeps)
            .expect("plant diverged in test");
        out.push(((k + 1) as f64 * control_dt, state));
    }
    out
}

const ORACLE_GRID: f64 = 2e-4;

/// Brute-force minimum time to bring a relative double integrator from
/// `(dp, dv)` to rest at the origin with a two-phase profile: constant
/// acceleration of magnitude `a_go`, one switch, then constant magnitude
/// `a_stop`. All four sign combinations are scanned over a dense grid of
/// switch times and each bracketed root is bisected down.
pub fn one_switch_min_time(dp: f64, dv: f64, a_go: f64, a_stop: f64) -> f64 {
    assert!(a_go > 0.0 && a_stop > 0.0);
    let slow = a_go.min(a_stop);
    let t_max = 10.0 + 4.0 * (dv.abs() / slow + (2.0 * dp.abs() / slow).sqrt());
    let mut best = f64::INFINITY;

    for sigma1 in [1.0f64, -1.0] {
        for sigma2 in [1.0f64, -1.0] {
            let u1 = sigma1 * a_go;
            let u2 = sigma2 * a_stop;
            // End position if phase 2 brakes the phase-1 state to rest, or
            // None when that would need negative time.
            let end_pos = |t1: f64| -> Option<f64> {
                let v1 = dv + u1 * t1;
                let p1 = dp + dv * t1 + 0.5 * u1 * t1 * t1;
                let t2 = -v1 / u2;
                if t2 < 0.0 {
                    return None;
                }
                Some(p1 + v1 * t2 + 0.5 * u2 * t2 * t2)
            };
            let total = |t1: f64| -> f64 {
                let v1 = dv + u1 * t1;
                t1 + (-v1 / u2).max(0.0)
            };

            let mut prev: Option<(f64, f64)> = None;
            let mut t1 = 0.0;
            while t1 <= t_max {
                match (prev, end_pos(t1)) {
                    (Some((pt, pv)), Some(cv)) => {
                        if pv == 0.0 {
                            best = best.min(total(pt));
                        }
                        if pv * cv < 0.0 {
                            // Bisect the bracketed root.
                            let (mut lo, mut hi) = (pt, t1);
                            for _ in 0..80 {
                                let mid = 0.5 * (lo + hi);
                                let mv = end_pos(mid).unwrap();
                                if mv * pv <= 0.0 {
                                    hi = mid;
                                } else {
                                    lo = mid;
                                }
                            }
                            best = best.min(total(0.5 * (lo + hi)));
                        }
                        prev = Some((t1, cv));
                    }
                    (_, Some(cv)) => {
                        if cv == 0.0 {
                            best = best.min(total(t1));
                        }
                        prev = Some((t1, cv));
                    }
                    (_, None) => prev = None,
                }
                t1 += ORACLE_GRID;
            }
        }
    }
    assert!(best.is_finite(), "oracle found no profile for ({dp}, {dv})");
    best
}

/// Time on the oracle's final braking phase still needed once the state is
/// inside the `(pos_tol, vel_tol)` box; subtract this from the origin time to
/// get the oracle's band-entry time.
pub fn band_entry_margin(a_stop: f64, pos_tol: f64, vel_tol: f64) -> f64 {
    (vel_tol / a_stop).min((2.0 * pos_tol / a_stop).sqrt())
}

/// First time after which `violated(tick)` stays false to the end, if any.
pub fn settle_time(times: &[f64], mut violated: impl FnMut(usize) -> bool) -> Option<f64> {
    let mut last_bad = None;
    for k in 0..times.len() {
        if violated(k) {
            last_bad = Some(k);
        }
    }
    match last_bad {
        None => Some(times[0]),
        Some(k) if k + 1 < times.len() => Some(times[k + 1]),
        Some(_) => None,
    }
}

#[cfg(test)]
mod oracle_checks {
    use super::*;

    #[test]
    fn symmetric_case_matches_analytic_formula() {
        // 2 * sqrt(dp / a) with dp = 1, a = 1.
        let t = one_switch_min_time(1.0, 0.0, 1.0, 1.0);
        assert!((t - 2.0).abs() < 1e-6, "oracle {t}");
        let t = one_switch_min_time(4.0, 0.0, 2.0, 2.0);
        assert!((t - 2.0f64 * (4.0f64 / 2.0).sqrt()).abs() < 1e-6, "oracle {t}");
    }

    #[test]
    fn asymmetric_case_matches_closed_form() {
        // Go at 2, brake at 1 from (1, 0): t1 = sqrt(2 dp a2 / (a1 (a1+a2))),
        // total = t1 (1 + a1/a2) = sqrt(3).
        let t = one_switch_min_time(1.0, 0.0, 2.0, 1.0);
        assert!((t - 3.0f64.sqrt()).abs() < 1e-6, "oracle {t}");
    }

    #[test]
    fn symmetric_with_initial_velocity() {
        // From (0, v) moving away: brake v (t = v/a), return over the
        // overshoot distance v^2/2a: total = v/a + 2 sqrt(v^2/(2a^2)) scaled;
        // closed form for this classic case is (1 + sqrt(2)) v / a.
        let (v, a) = (1.0, 1.0);
        let t = one_switch_min_time(0.0, v, a, a);
        assert!((t - (1.0 + 2.0f64.sqrt()) * v / a).abs() < 1e-5, "oracle {t}");
    }

    #[test]
    fn negative_gap_is_symmetric() {
        let a = one_switch_min_time(2.5, 0.3, 2.0, 1.0);
        let b = one_switch_min_time(-2.5, -0.3, 2.0, 1.0);
        assert!((a - b).abs() < 1e-6);
    }
}
