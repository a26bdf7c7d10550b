//! Reference frames and rotation kinematics.
//!
//! Three frames are used throughout: the Earth frame `{E}` (z-up), the body
//! frame `{B}` attached to the vehicle, and the yaw-only frame `{B'}` that
//! shares the body origin but keeps its x-y plane parallel to `{E}`'s.
//!
//! Convention fixed here, once: `rot_z(yaw)` applied to an `{E}` vector yields
//! that vector expressed in `{B'}` coordinates (a passive, frame-change
//! rotation). The inverse transform is the transpose. All other modules go
//! through [`earth_to_bprime`] / [`bprime_to_earth`] instead of building
//! rotation matrices themselves.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A 3-component vector. Units depend on context (m, m/s, rad/s, N, ...).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Infinity norm, the bound used by command saturation checks.
    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// A 3x3 rotation matrix, row-major. Constructors keep it orthonormal with
/// det +1; `compose`/`transpose` preserve that up to floating-point error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3 {
    pub m: [[f64; 3]; 3],
}

impl Rot3 {
    pub const IDENTITY: Rot3 = Rot3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Matrix product `a * b` (apply `b` first, then `a`).
    pub fn compose(self, b: Rot3) -> Rot3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * b.m[k][j]).sum();
            }
        }
        Rot3 { m: out }
    }

    pub fn apply(self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }

    /// Transpose, which for a rotation is also the inverse.
    pub fn transpose(self) -> Rot3 {
        let m = self.m;
        Rot3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn det(self) -> f64 {
        let m = self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max elementwise deviation of `R^T R` from the identity.
    pub fn orthonormality_error(self) -> f64 {
        let rtr = self.transpose().compose(self);
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                err = err.max((rtr.m[i][j] - expect).abs());
            }
        }
        err
    }
}

/// Rotation about the z-axis by the yaw angle:
/// `[[c, s, 0], [-s, c, 0], [0, 0, 1]]`. Maps `{E}` coordinates into `{B'}`.
pub fn rot_z(yaw: f64) -> Rot3 {
    let (s, c) = yaw.sin_cos();
    Rot3 {
        m: [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]],
    }
}

/// Rotation about the x-axis by the roll angle:
/// `[[1, 0, 0], [0, c, s], [0, -s, c]]`.
pub fn rot_x(roll: f64) -> Rot3 {
    let (s, c) = roll.sin_cos();
    Rot3 {
        m: [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]],
    }
}

/// Rotation about the y-axis by the pitch angle:
/// `[[c, 0, s], [0, 1, 0], [-s, 0, c]]`.
pub fn rot_y(pitch: f64) -> Rot3 {
    let (s, c) = pitch.sin_cos();
    Rot3 {
        m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
    }
}

/// Express an `{E}`-frame vector in `{B'}` coordinates.
pub fn earth_to_bprime(yaw: f64, v_earth: Vec3) -> Vec3 {
    rot_z(yaw).apply(v_earth)
}

/// Express a `{B'}`-frame vector in `{E}` coordinates.
pub fn bprime_to_earth(yaw: f64, v_bprime: Vec3) -> Vec3 {
    rot_z(yaw).transpose().apply(v_bprime)
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = theta % two_pi;
    if a <= -PI {
        a += two_pi;
    } else if a > PI {
        a -= two_pi;
    }
    a
}

/// Euler attitude: roll and pitch are measured between `{B'}` and `{B}`, yaw
/// between `{B'}` and `{E}`. The controller clamps roll/pitch to the
/// small-angle regime, so no singularity handling is needed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Attitude {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Attitude {
    pub fn level(yaw: f64) -> Self {
        Attitude { roll: 0.0, pitch: 0.0, yaw }
    }

    pub fn is_finite(self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }
}

/// Direction of the total rotor thrust expressed in `{B'}`, from composing the
/// roll and pitch rotations applied to the body-up axis. At level attitude
/// this is `+z`; small tilt moves it toward `(pitch, roll, 1)`.
pub fn thrust_direction_bprime(roll: f64, pitch: f64) -> Vec3 {
    rot_x(roll)
        .compose(rot_y(pitch))
        .apply(Vec3::new(0.0, 0.0, 1.0))
}

/// Thrust direction in `{E}` for a full attitude.
pub fn thrust_direction_earth(att: Attitude) -> Vec3 {
    bprime_to_earth(att.yaw, thrust_direction_bprime(att.roll, att.pitch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_mat_eq(a: Rot3, b: Rot3, tol: f64) {
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (a.m[i][j] - b.m[i][j]).abs() <= tol,
                    "({i},{j}): {} vs {}",
                    a.m[i][j],
                    b.m[i][j]
                );
            }
        }
    }

    #[test]
    fn rot_z_zero_is_identity() {
        assert_mat_eq(rot_z(0.0), Rot3::IDENTITY, 0.0);
    }

    #[test]
    fn rot_z_quarter_turn() {
        let r = rot_z(PI / 2.0);
        let expect = Rot3 {
            m: [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        };
        assert_mat_eq(r, expect, 1e-15);
    }

    #[test]
    fn rot_z_group_property() {
        let lhs = rot_z(0.3).compose(rot_z(0.5));
        assert_mat_eq(lhs, rot_z(0.8), 1e-15);
    }

    #[test]
    fn rot_x_zero_is_identity() {
        assert_mat_eq(rot_x(0.0), Rot3::IDENTITY, 0.0);
    }

    #[test]
    fn rot_y_half_turn_flips_x() {
        let v = rot_y(PI).apply(Vec3::new(1.0, 0.0, 0.0));
        assert!((v.x + 1.0).abs() < 1e-15);
        assert!(v.y.abs() < 1e-15);
        assert!(v.z.abs() < 1e-15);
    }

    #[test]
    fn rot_x_inverse_property() {
        let r = rot_x(0.1).compose(rot_x(-0.1));
        assert_mat_eq(r, Rot3::IDENTITY, 1e-12);
    }

    #[test]
    fn apply_identity() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(Rot3::IDENTITY.apply(v), v);
    }

    #[test]
    fn transpose_undoes_rotation() {
        let r = rot_z(0.7);
        let v = Vec3::new(1.0, 0.0, 2.0);
        let back = r.transpose().apply(r.apply(v));
        assert!((back - v).norm() < 1e-12);
    }

    #[test]
    fn compose_stays_orthonormal() {
        let r = rot_x(0.1).compose(rot_y(0.2));
        assert!(r.orthonormality_error() < 1e-12);
        assert!((r.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rot_z_transpose_is_negative_angle() {
        assert_mat_eq(rot_z(0.7).transpose(), rot_z(-0.7), 1e-12);
    }

    #[test]
    fn wrap_takes_short_way() {
        // 3.1 - (-3.1) = 6.2 wraps past pi to the short side.
        let err = wrap_angle(3.1 - (-3.1));
        assert!((err - (6.2 - 2.0 * PI)).abs() < 1e-12);
        assert!(err < 0.0 && err.abs() < 0.09);
    }

    #[test]
    fn wrap_boundary() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn earth_bprime_round_trip_at_quarter_yaw() {
        // Body x-axis seen in {E} at yaw pi/2 is (0,1,0); in {B'} it is x.
        let v = earth_to_bprime(PI / 2.0, Vec3::new(0.0, 1.0, 0.0));
        assert!((v - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        let back = bprime_to_earth(PI / 2.0, v);
        assert!((back - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn thrust_direction_level_is_up() {
        let d = thrust_direction_bprime(0.0, 0.0);
        assert!((d - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn thrust_direction_matches_small_angle_expansion() {
        let d = thrust_direction_bprime(0.02, 0.03);
        assert!((d.x - 0.03).abs() < 1e-3);
        assert!((d.y - 0.02).abs() < 1e-3);
        assert!((d.z - 1.0).abs() < 1e-3);
        // Exact closed form: (sin p, sin r cos p, cos r cos p).
        assert!((d.x - (0.03f64).sin()).abs() < 1e-15);
        assert!((d.y - (0.02f64).sin() * (0.03f64).cos()).abs() < 1e-15);
        assert!((d.z - (0.02f64).cos() * (0.03f64).cos()).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn axis_rotations_are_orthonormal(theta in -10.0f64..10.0) {
            for r in [rot_x(theta), rot_y(theta), rot_z(theta)] {
                prop_assert!(r.orthonormality_error() < 1e-9);
                prop_assert!((r.det() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn apply_preserves_norm(
            theta in -10.0f64..10.0,
            x in -100.0f64..100.0,
            y in -100.0f64..100.0,
            z in -100.0f64..100.0,
        ) {
            let v = Vec3::new(x, y, z);
            let r = rot_z(theta).compose(rot_x(theta * 0.5)).compose(rot_y(theta * 0.25));
            prop_assert!((r.apply(v).norm() - v.norm()).abs() < 1e-9);
        }

        #[test]
        fn rot_z_transpose_matches_negated_angle(theta in -10.0f64..10.0) {
            let a = rot_z(theta).transpose();
            let b = rot_z(-theta);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((a.m[i][j] - b.m[i][j]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn wrap_lands_in_half_open_interval(theta in -1000.0f64..1000.0) {
            let w = wrap_angle(theta);
            prop_assert!(w > -PI && w <= PI);
            // Same angle modulo 2*pi.
            prop_assert!(((theta - w) / (2.0 * PI)).round() * 2.0 * PI - (theta - w) < 1e-6);
        }
    }
}
