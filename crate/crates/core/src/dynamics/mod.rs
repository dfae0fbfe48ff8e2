//! Rigid-body motion for the floating target and the kinematic gripper.
//!
//! The target is a torque-free box integrated with RK4; the gripper has
//! infinite mass and follows its commanded displacements exactly. Contacts
//! only ever change the target's velocity.

mod contact;
mod gripper;

use serde::{Deserialize, Serialize};

use crate::spatial::quat::hamilton;
use crate::spatial::{Pose, UnitQuaternion, Vec3};

pub use contact::{detect_contacts, resolve_contacts, ContactResult, SolverParams};
pub use gripper::{apply_gripper_action, ActionLimits, CollisionSphere, GripperBody, GripperGeometry};

/// Dynamic state of the free-floating target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBody {
    pub pose: Pose,
    /// World frame, m/s.
    pub lin_vel: Vec3,
    /// Body frame, rad/s.
    pub ang_vel: Vec3,
    pub mass: f64,
    /// Principal moments of inertia in the body frame, kg·m².
    pub inertia_diag: Vec3,
}

/// Solid-box principal inertia from mass and half-extents.
pub fn box_inertia(mass: f64, half_extents: Vec3) -> Vec3 {
    let (a, b, c) = (2.0 * half_extents.x, 2.0 * half_extents.y, 2.0 * half_extents.z);
    Vec3::new(b * b + c * c, a * a + c * c, a * a + b * b) * (mass / 12.0)
}

impl RigidBody {
    pub fn angular_velocity_world(&self) -> Vec3 {
        self.pose.orientation.rotate(self.ang_vel)
    }

    pub fn angular_momentum_world(&self) -> Vec3 {
        self.pose
            .orientation
            .rotate(self.inertia_diag.component_mul(self.ang_vel))
    }

    pub fn rotational_energy(&self) -> f64 {
        0.5 * self.ang_vel.dot(self.inertia_diag.component_mul(self.ang_vel))
    }

    pub fn linear_momentum(&self) -> Vec3 {
        self.lin_vel * self.mass
    }

    /// Velocity of the material point currently at `p_world`.
    pub fn point_velocity(&self, p_world: Vec3) -> Vec3 {
        self.lin_vel + self.angular_velocity_world().cross(p_world - self.pose.position)
    }

    /// Applies `I_world⁻¹ · v` using the diagonal body-frame inertia.
    pub fn inv_inertia_world(&self, v: Vec3) -> Vec3 {
        let q = self.pose.orientation;
        q.rotate(q.inverse_rotate(v).component_div(self.inertia_diag))
    }
}

// Time derivative of (q, ω) for torque-free motion:
//   q̇ = ½ q ⊗ (0, ω),   ω̇ = I⁻¹ ((I ω) × ω)
fn torque_free_rate(q: [f64; 4], w: Vec3, inertia: Vec3) -> ([f64; 4], Vec3) {
    let dq = hamilton(q, [0.0, w.x, w.y, w.z]).map(|c| 0.5 * c);
    let dw = inertia.component_mul(w).cross(w).component_div(inertia);
    (dq, dw)
}

fn axpy4(q: [f64; 4], s: f64, d: [f64; 4]) -> [f64; 4] {
    [q[0] + s * d[0], q[1] + s * d[1], q[2] + s * d[2], q[3] + s * d[3]]
}

/// Advances the target by `dt` with no external forces.
pub fn step_free_body(body: &RigidBody, dt: f64) -> RigidBody {
    debug_assert!(dt > 0.0);
    let inertia = body.inertia_diag;
    let q0 = body.pose.orientation.to_array();
    let w0 = body.ang_vel;

    let (k1q, k1w) = torque_free_rate(q0, w0, inertia);
    let (k2q, k2w) = torque_free_rate(axpy4(q0, 0.5 * dt, k1q), w0 + k1w * (0.5 * dt), inertia);
    let (k3q, k3w) = torque_free_rate(axpy4(q0, 0.5 * dt, k2q), w0 + k2w * (0.5 * dt), inertia);
    let (k4q, k4w) = torque_free_rate(axpy4(q0, dt, k3q), w0 + k3w * dt, inertia);

    let mut q = q0;
    for i in 0..4 {
        q[i] += dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
    }
    let w = w0 + (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * (dt / 6.0);

    RigidBody {
        pose: Pose::new(body.pose.position + body.lin_vel * dt, UnitQuaternion::from_array(q)),
        ang_vel: w,
        ..*body
    }
}
