use serde::{Deserialize, Serialize};

use super::{Pose, Vec3};

/// Oriented box: a pose plus strictly positive half-extents along its body axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub pose: Pose,
    pub half_extents: Vec3,
}

/// A penetrating contact between a gripper sphere and the target box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    /// World-frame point on the target where the impulse acts.
    pub point: Vec3,
    /// Unit normal pointing from the gripper into the target.
    pub normal: Vec3,
    /// Penetration depth, non-negative.
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereBoxQuery {
    /// Closest point of the solid box to the sphere center (the center itself when inside).
    pub closest_point: Vec3,
    /// Surface-to-surface distance; negative when overlapping.
    pub signed_distance: f64,
    pub contact: Option<Contact>,
}

impl Obb {
    pub fn new(pose: Pose, half_extents: Vec3) -> Self {
        debug_assert!(half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.z > 0.0);
        Obb { pose, half_extents }
    }

    /// The eight corners in world coordinates.
    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.half_extents;
        let mut out = [Vec3::ZERO; 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *c = self.pose.transform_point(Vec3::new(sx * h.x, sy * h.y, sz * h.z));
        }
        out
    }

    /// Clamp a world point into the solid box.
    pub fn clamp_point(&self, p_world: Vec3) -> Vec3 {
        let local = self.pose.inverse_transform_point(p_world);
        let h = self.half_extents;
        let clamped = Vec3::new(
            local.x.clamp(-h.x, h.x),
            local.y.clamp(-h.y, h.y),
            local.z.clamp(-h.z, h.z),
        );
        self.pose.transform_point(clamped)
    }
}

/// Distance and contact between a sphere and an oriented box.
///
/// Outside the box the distance is measured to the clamped closest point. For a
/// center inside the box the distance is `-(depth to nearest face) - radius`,
/// which keeps the signed distance 1-Lipschitz in the center position.
pub fn sphere_obb_query(center: Vec3, radius: f64, bx: &Obb) -> SphereBoxQuery {
    debug_assert!(radius > 0.0);
    let local = bx.pose.inverse_transform_point(center);
    let h = bx.half_extents;
    let clamped = Vec3::new(
        local.x.clamp(-h.x, h.x),
        local.y.clamp(-h.y, h.y),
        local.z.clamp(-h.z, h.z),
    );
    let delta = local - clamped;
    let outside_dist = delta.norm();
    let closest_point = bx.pose.transform_point(clamped);

    let (signed_distance, outward_local) = if outside_dist > 0.0 {
        (outside_dist - radius, delta / outside_dist)
    } else {
        let face_depth = (h - local.abs()).to_array().into_iter().fold(f64::INFINITY, f64::min);
        // Inside: push away from the box center.
        let dir = local.try_normalize(1e-12).unwrap_or(Vec3::X);
        (-face_depth - radius, dir)
    };

    let contact = (signed_distance < 0.0).then(|| Contact {
        point: closest_point,
        normal: -bx.pose.orientation.rotate(outward_local),
        depth: -signed_distance,
    });
    SphereBoxQuery {
        closest_point,
        signed_distance,
        contact,
    }
}
