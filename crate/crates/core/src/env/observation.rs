use rand::Rng;

use super::WorldState;
use crate::spatial::{orientation_error, sphere_obb_query, UnitQuaternion, Vec3};

/// Observation width without the tactile channel.
pub const BASE_OBS_DIM: usize = 39;

/// Index ranges of the observation blocks.
pub mod layout {
    use std::ops::Range;

    pub const GRIPPER_POSITION: Range<usize> = 0..3;
    pub const GRIPPER_EULER: Range<usize> = 3..6;
    pub const GRIPPER_LIN_VEL: Range<usize> = 6..9;
    pub const GRIPPER_ANG_VEL: Range<usize> = 9..12;
    pub const TARGET_POSITION: Range<usize> = 12..15;
    pub const TARGET_EULER: Range<usize> = 15..18;
    pub const TARGET_LIN_VEL: Range<usize> = 18..21;
    pub const TARGET_ANG_VEL: Range<usize> = 21..24;
    pub const POSITION_DIFF: Range<usize> = 24..27;
    pub const ORIENTATION_DIFF: Range<usize> = 27..30;
    pub const LIN_VEL_DIFF: Range<usize> = 30..33;
    pub const ANG_VEL_DIFF: Range<usize> = 33..36;
    pub const MIN_DISTANCE: Range<usize> = 36..39;
    pub const CONTACT_FORCE: usize = 39;
}

/// Flat observation vector; 39 entries, or 40 with the tactile channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Uniform half-widths applied to the observed target state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObservationNoise {
    pub position: f64,
    pub velocity: f64,
}

fn uniform_offset(rng: &mut impl Rng, half_width: f64) -> f64 {
    half_width * (2.0 * rng.random::<f64>() - 1.0)
}

fn noisy(v: Vec3, half_width: f64, rng: &mut impl Rng) -> Vec3 {
    let x = v.x + uniform_offset(rng, half_width);
    let y = v.y + uniform_offset(rng, half_width);
    let z = v.z + uniform_offset(rng, half_width);
    Vec3::new(x, y, z)
}

/// Per-axis gap between the closest gripper-sphere surface point and the
/// target box surface, in world axes. Zero while any sphere overlaps the box.
pub fn min_distance_per_axis(world: &WorldState) -> Vec3 {
    let bx = world.target_box();
    let mut best: Option<(f64, Vec3, Vec3, f64)> = None;
    for (c, r) in world.gripper.sphere_centers_world() {
        let q = sphere_obb_query(c, r, &bx);
        if best.is_none_or(|b| q.signed_distance < b.0) {
            best = Some((q.signed_distance, c, q.closest_point, r));
        }
    }
    let Some((d, center, box_pt, radius)) = best else {
        return Vec3::ZERO;
    };
    if d <= 0.0 {
        return Vec3::ZERO;
    }
    let to_box = box_pt - center;
    let surface = center + to_box * (radius / to_box.norm());
    (box_pt - surface).abs()
}

/// Builds the observation vector. Gripper fields are exact; the target's
/// position and velocities carry uniform noise. Nine noise draws are consumed
/// on every call regardless of the half-widths.
pub fn assemble_observation(
    world: &WorldState,
    goal_offset: UnitQuaternion,
    tactile_force: Option<f64>,
    noise: ObservationNoise,
    rng: &mut impl Rng,
) -> Observation {
    let g = &world.gripper;
    let t = &world.target;

    let t_pos = noisy(t.pose.position, noise.position, rng);
    let t_vel = noisy(t.lin_vel, noise.velocity, rng);
    let t_ang = noisy(t.angular_velocity_world(), noise.velocity, rng);

    let mut v = Vec::with_capacity(BASE_OBS_DIM + 1);
    let mut push = |x: Vec3| v.extend_from_slice(&x.to_array());
    push(g.pose.position);
    push(g.pose.orientation.to_euler_xyz().to_vec3());
    push(g.lin_vel);
    push(g.ang_vel);
    push(t_pos);
    push(t.pose.orientation.to_euler_xyz().to_vec3());
    push(t_vel);
    push(t_ang);
    push(t_pos - g.pose.position);
    push(orientation_error(g.pose.orientation, t.pose.orientation * goal_offset));
    push(t_vel - g.lin_vel);
    push(t_ang - g.ang_vel);
    push(min_distance_per_axis(world));
    if let Some(f) = tactile_force {
        v.push(f);
    }
    Observation(v)
}
