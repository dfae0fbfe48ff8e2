use serde::{Deserialize, Serialize};

use super::{GripperBody, RigidBody};
use crate::spatial::{sphere_obb_query, Contact, Obb, Vec3};

/// Sequential-impulse settings. Friction and restitution are fixed at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub iterations: usize,
    /// Baumgarte factor: fraction of the penetration depth removed per step.
    pub baumgarte: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            iterations: 10,
            baumgarte: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContactResult {
    pub contacts: Vec<Contact>,
    /// Sum of accumulated normal impulses, N·s.
    pub total_normal_impulse: f64,
    /// `total_normal_impulse / dt`, N.
    pub total_normal_force: f64,
    /// Final accumulated impulse per contact, same order as `contacts`.
    pub impulses: Vec<f64>,
}

/// One contact per gripper sphere overlapping the target box.
pub fn detect_contacts(g: &GripperBody, target: &Obb) -> Vec<Contact> {
    g.sphere_centers_world()
        .filter_map(|(c, r)| sphere_obb_query(c, r, target).contact)
        .collect()
}

struct Row {
    contact: Contact,
    r: Vec3,
    r_cross_n: Vec3,
    inv_eff_mass: f64,
    bias: f64,
    gripper_normal_vel: f64,
    lambda: f64,
}

/// Resolves gripper-target contacts against an infinite-mass gripper.
///
/// Each contact gets a non-negative accumulated impulse such that the target's
/// separating velocity at the contact reaches `baumgarte * depth / dt`. Only the
/// target's velocities change; positions are left to the integrator.
pub fn resolve_contacts(
    target: &RigidBody,
    target_box: &Obb,
    contacts: &[Contact],
    gripper_vel_at: impl Fn(Vec3) -> Vec3,
    dt: f64,
    params: &SolverParams,
) -> (RigidBody, ContactResult) {
    debug_assert!(dt > 0.0);
    debug_assert!((target_box.pose.position - target.pose.position).max_abs() < 1e-12);
    if contacts.is_empty() {
        return (*target, ContactResult::default());
    }

    let inv_mass = 1.0 / target.mass;
    let mut v = target.lin_vel;
    let mut w = target.angular_velocity_world();

    let mut rows: Vec<Row> = contacts
        .iter()
        .map(|c| {
            let r = c.point - target.pose.position;
            let r_cross_n = r.cross(c.normal);
            let inv_eff_mass = inv_mass + r_cross_n.dot(target.inv_inertia_world(r_cross_n));
            Row {
                contact: *c,
                r,
                r_cross_n,
                inv_eff_mass,
                bias: params.baumgarte * c.depth / dt,
                gripper_normal_vel: gripper_vel_at(c.point).dot(c.normal),
                lambda: 0.0,
            }
        })
        .collect();

    for _ in 0..params.iterations {
        for row in rows.iter_mut() {
            let n = row.contact.normal;
            let separating = (v + w.cross(row.r)).dot(n) - row.gripper_normal_vel;
            let delta = (row.bias - separating) / row.inv_eff_mass;
            let accumulated = (row.lambda + delta).max(0.0);
            let applied = accumulated - row.lambda;
            row.lambda = accumulated;
            v += n * (applied * inv_mass);
            w += target.inv_inertia_world(row.r_cross_n) * applied;
        }
    }

    let impulses: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let total: f64 = impulses.iter().sum();
    let mut out = *target;
    out.lin_vel = v;
    out.ang_vel = target.pose.orientation.inverse_rotate(w);
    (
        out,
        ContactResult {
            contacts: contacts.to_vec(),
            total_normal_impulse: total,
            total_normal_force: total / dt,
            impulses,
        },
    )
}
