use std::f64::consts::PI;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::Vec3;

/// Rotation as a unit quaternion, stored with `w >= 0`.
///
/// Every constructor normalizes and canonicalizes the sign, so two quaternions
/// describing the same rotation compare equal field by field (up to rounding).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Intrinsic X-Y-Z Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerXYZ {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerXYZ {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        EulerXYZ { roll, pitch, yaw }
    }

    pub fn to_vec3(self) -> Vec3 {
        Vec3::new(self.roll, self.pitch, self.yaw)
    }

    pub fn from_vec3(v: Vec3) -> Self {
        EulerXYZ::new(v.x, v.y, v.z)
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

// Hamilton product on raw (w, x, y, z) tuples; used by the integrators, whose
// intermediate stages are not unit length.
pub(crate) fn hamilton(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    let [aw, ax, ay, az] = a;
    let [bw, bx, by, bz] = b;
    [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ]
}

fn wrap_to_pi(a: f64) -> f64 {
    // atan2 can return exactly -pi; the canonical range is (-pi, pi].
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes `(w, x, y, z)`; falls back to identity for a zero input.
    pub fn new_normalize(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Self::IDENTITY;
        }
        let (mut w, mut x, mut y, mut z) = (w / n, x / n, y / n, z / n);
        // w == 0 leaves q and -q both valid; break the tie on the vector part.
        let flip = if w != 0.0 {
            w < 0.0
        } else if x != 0.0 {
            x < 0.0
        } else if y != 0.0 {
            y < 0.0
        } else {
            z < 0.0
        };
        if flip {
            w = -w;
            x = -x;
            y = -y;
            z = -z;
        }
        UnitQuaternion { w, x, y, z }
    }

    pub(crate) fn from_array(q: [f64; 4]) -> Self {
        Self::new_normalize(q[0], q[1], q[2], q[3])
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let Some(a) = axis.try_normalize(0.0) else {
            return Self::IDENTITY;
        };
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new_normalize(c, a.x * s, a.y * s, a.z * s)
    }

    /// Exponential map: rotation of `|v|` radians about `v`.
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let angle = v.norm();
        if angle < 1e-300 {
            return Self::IDENTITY;
        }
        Self::from_axis_angle(v / angle, angle)
    }

    /// Logarithm map; the returned angle lies in `[0, pi]`.
    pub fn to_rotation_vector(self) -> Vec3 {
        let v = Vec3::new(self.x, self.y, self.z);
        let n = v.norm();
        if n < 1e-300 {
            return Vec3::ZERO;
        }
        let angle = 2.0 * n.atan2(self.w);
        v * (angle / n)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn inverse(self) -> Self {
        Self::new_normalize(self.w, -self.x, -self.y, -self.z)
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        debug_assert!(self.is_unit(1e-6));
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    pub fn inverse_rotate(self, v: Vec3) -> Vec3 {
        UnitQuaternion {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
        .rotate(v)
    }

    pub fn from_euler_xyz(e: EulerXYZ) -> Self {
        let qx = Self::from_axis_angle(Vec3::X, e.roll);
        let qy = Self::from_axis_angle(Vec3::Y, e.pitch);
        let qz = Self::from_axis_angle(Vec3::Z, e.yaw);
        qx * qy * qz
    }

    /// Extracts intrinsic X-Y-Z angles. At gimbal lock (`|pitch| = pi/2`) the
    /// roll is pinned to zero and the whole residual rotation goes to yaw.
    pub fn to_euler_xyz(self) -> EulerXYZ {
        let UnitQuaternion { w, x, y, z } = self;
        let r00 = 1.0 - 2.0 * (y * y + z * z);
        let r01 = 2.0 * (x * y - w * z);
        let r02 = 2.0 * (x * z + w * y);
        let r12 = 2.0 * (y * z - w * x);
        let r22 = 1.0 - 2.0 * (x * x + y * y);

        let cos_pitch = r00.hypot(r01);
        let pitch = r02.atan2(cos_pitch);
        if cos_pitch < 1e-10 {
            let r10 = 2.0 * (x * y + w * z);
            let r11 = 1.0 - 2.0 * (x * x + z * z);
            return EulerXYZ::new(0.0, pitch, wrap_to_pi(r10.atan2(r11)));
        }
        EulerXYZ::new(wrap_to_pi((-r12).atan2(r22)), pitch, wrap_to_pi((-r01).atan2(r00)))
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    /// Hamilton product `self ⊗ rhs`, renormalized.
    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        debug_assert!(self.is_unit(1e-6) && rhs.is_unit(1e-6));
        UnitQuaternion::from_array(hamilton(self.to_array(), rhs.to_array()))
    }
}

/// Euler-XYZ angles of the relative rotation `q_a⁻¹ ⊗ q_b`.
pub fn orientation_error(q_a: UnitQuaternion, q_b: UnitQuaternion) -> Vec3 {
    (q_a.inverse() * q_b).to_euler_xyz().to_vec3()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion,
}

impl Pose {
    pub fn new(position: Vec3, orientation: UnitQuaternion) -> Self {
        Pose { position, orientation }
    }

    pub fn from_position(position: Vec3) -> Self {
        Pose::new(position, UnitQuaternion::IDENTITY)
    }

    pub fn transform_point(&self, local: Vec3) -> Vec3 {
        self.position + self.orientation.rotate(local)
    }

    pub fn inverse_transform_point(&self, world: Vec3) -> Vec3 {
        self.orientation.inverse_rotate(world - self.position)
    }
}
