use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{ConvexRegion, EulerXYZ, Pose, UnitQuaternion, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionSphere {
    pub center_body: Vec3,
    pub radius: f64,
}

/// Per-control-step displacement bounds for a unit action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionLimits {
    /// Meters per control step.
    pub max_translation_step: f64,
    /// Radians per control step, per Euler component.
    pub max_rotation_step: f64,
}

impl Default for ActionLimits {
    fn default() -> Self {
        ActionLimits {
            max_translation_step: 0.01,
            max_rotation_step: 0.035,
        }
    }
}

impl ActionLimits {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.max_translation_step) && ok(self.max_rotation_step) {
            Ok(())
        } else {
            Err(Error::config(format!("action limits must be positive, got {self:?}")))
        }
    }

    pub fn scaled(&self, s: f64) -> ActionLimits {
        ActionLimits {
            max_translation_step: self.max_translation_step * s,
            max_rotation_step: self.max_rotation_step * s,
        }
    }
}

/// Open three-finger layout. Fingers are rigid sphere chains parallel to the
/// body z axis, placed at 120° around it; the palm sits below on -z. The body
/// origin is the grasp center between the fingers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GripperGeometry {
    /// Surface-to-surface gap between neighbouring fingers, m.
    pub finger_clearance: f64,
    pub finger_sphere_radius: f64,
    /// Body-z positions of the three spheres along each finger.
    pub finger_levels: [f64; 3],
    pub palm_sphere_radius: f64,
    pub palm_z: f64,
    /// Extra hull points on the palm face: body z and radial distance.
    pub palm_hull_z: f64,
    pub palm_hull_radius: f64,
}

impl Default for GripperGeometry {
    fn default() -> Self {
        GripperGeometry {
            finger_clearance: 0.16,
            finger_sphere_radius: 0.012,
            finger_levels: [-0.06, 0.0, 0.06],
            palm_sphere_radius: 0.045,
            palm_z: -0.145,
            palm_hull_z: -0.10,
            palm_hull_radius: 0.06,
        }
    }
}

impl GripperGeometry {
    /// Distance from the body z axis to each finger's sphere centers.
    pub fn finger_radial(&self) -> f64 {
        // Neighbouring fingers sit on an equilateral triangle of side r·√3.
        (self.finger_clearance + 2.0 * self.finger_sphere_radius) / 3f64.sqrt()
    }

    fn finger_angles() -> [f64; 3] {
        [PI / 2.0, PI / 2.0 + 2.0 * PI / 3.0, PI / 2.0 + 4.0 * PI / 3.0]
    }

    pub fn collision_spheres(&self) -> Vec<CollisionSphere> {
        let r = self.finger_radial();
        let mut out = Vec::with_capacity(10);
        for a in Self::finger_angles() {
            for z in self.finger_levels {
                out.push(CollisionSphere {
                    center_body: Vec3::new(r * a.cos(), r * a.sin(), z),
                    radius: self.finger_sphere_radius,
                });
            }
        }
        out.push(CollisionSphere {
            center_body: Vec3::new(0.0, 0.0, self.palm_z),
            radius: self.palm_sphere_radius,
        });
        out
    }

    /// Hull of the finger sphere centers plus three palm points.
    pub fn finger_region(&self) -> Result<ConvexRegion> {
        let mut pts: Vec<Vec3> = self.collision_spheres().iter().take(9).map(|s| s.center_body).collect();
        for a in Self::finger_angles() {
            pts.push(Vec3::new(
                self.palm_hull_radius * a.cos(),
                self.palm_hull_radius * a.sin(),
                self.palm_hull_z,
            ));
        }
        ConvexRegion::hull_of(&pts)
    }
}

/// Kinematic gripper: pose is commanded directly, velocities are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperBody {
    pub pose: Pose,
    /// World frame, m/s.
    pub lin_vel: Vec3,
    /// World frame, rad/s.
    pub ang_vel: Vec3,
    pub collision_spheres: Vec<CollisionSphere>,
    /// Finger envelope in the body frame.
    pub finger_region: ConvexRegion,
}

impl GripperBody {
    pub fn new(pose: Pose, geometry: &GripperGeometry) -> Result<Self> {
        let collision_spheres = geometry.collision_spheres();
        if collision_spheres.len() < 10 {
            return Err(Error::contract("gripper needs 9 finger spheres and a palm"));
        }
        Ok(GripperBody {
            pose,
            lin_vel: Vec3::ZERO,
            ang_vel: Vec3::ZERO,
            collision_spheres,
            finger_region: geometry.finger_region()?,
        })
    }

    pub fn sphere_centers_world(&self) -> impl Iterator<Item = (Vec3, f64)> + '_ {
        self.collision_spheres
            .iter()
            .map(|s| (self.pose.transform_point(s.center_body), s.radius))
    }

    /// Velocity of the gripper material point at `p_world`.
    pub fn point_velocity(&self, p_world: Vec3) -> Vec3 {
        self.lin_vel + self.ang_vel.cross(p_world - self.pose.position)
    }
}

/// Moves the gripper by a body-frame displacement scaled from a unit action.
///
/// `action[0..3]` translates along the body axes, `action[3..6]` are Euler-XYZ
/// increments composed on the body side. Components outside `[-1, 1]` are
/// rejected rather than clipped.
pub fn apply_gripper_action(g: &GripperBody, action: &[f64], limits: &ActionLimits, dt: f64) -> Result<GripperBody> {
    if action.len() != 6 {
        return Err(Error::contract(format!(
            "gripper action needs 6 components, got {}",
            action.len()
        )));
    }
    if let Some(a) = action.iter().find(|a| !(a.abs() <= 1.0)) {
        return Err(Error::contract(format!("gripper action component {a} outside [-1, 1]")));
    }
    if !(dt > 0.0) {
        return Err(Error::contract(format!("dt must be positive, got {dt}")));
    }

    let q = g.pose.orientation;
    let step_body = Vec3::from_slice(&action[0..3]) * limits.max_translation_step;
    let step_world = q.rotate(step_body);
    let euler = Vec3::from_slice(&action[3..6]) * limits.max_rotation_step;
    let dq = UnitQuaternion::from_euler_xyz(EulerXYZ::from_vec3(euler));

    let mut out = g.clone();
    out.pose = Pose::new(g.pose.position + step_world, q * dq);
    out.lin_vel = step_world / dt;
    out.ang_vel = q.rotate(dq.to_rotation_vector()) / dt;
    Ok(out)
}
