use serde::{Deserialize, Serialize};

use super::WorldState;
use crate::spatial::{orientation_error, UnitQuaternion};

/// The four shaped reward components of one control step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    /// Distance term in (0, 1].
    pub r_dist: f64,
    /// Alignment term in (0, 1].
    pub r_align: f64,
    /// 1 when a target corner lies inside the finger envelope, else 0.
    pub r_surr: f64,
    /// -1 when the gripper pushed on the target this step, else 0.
    pub r_contact: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.r_dist + self.r_align + self.r_surr + self.r_contact
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    pub containment_margin: f64,
    pub goal_offset: UnitQuaternion,
}

/// `1 - tanh(x)`, written as `2 / (1 + e^{2x})` so it stays positive for large x.
pub fn one_minus_tanh(x: f64) -> f64 {
    2.0 / (1.0 + (2.0 * x).exp())
}

/// Reward for the current world state given this step's total contact force.
pub fn compute_reward(world: &WorldState, contact_force: f64, params: &RewardParams) -> RewardTerms {
    let g = &world.gripper;
    let t = &world.target;

    let dist = (g.pose.position - t.pose.position).norm();
    let goal = t.pose.orientation * params.goal_offset;
    let align = orientation_error(g.pose.orientation, goal).norm();

    let inside = world
        .target_box()
        .corners()
        .iter()
        .any(|c| g.finger_region.contains_point(&g.pose, *c, params.containment_margin));

    RewardTerms {
        r_dist: one_minus_tanh(dist),
        r_align: one_minus_tanh(align),
        r_surr: if inside { 1.0 } else { 0.0 },
        r_contact: if contact_force > 0.0 { -1.0 } else { 0.0 },
    }
}

/// Longest run of consecutive entries strictly above `threshold`, as `(start, len)`.
/// Ties keep the earliest run; an empty trace gives `(0, 0)`.
pub fn longest_streak(rewards: &[f64], threshold: f64) -> (usize, usize) {
    let mut best = (0, 0);
    let mut start = 0;
    let mut len = 0;
    for (i, &r) in rewards.iter().enumerate() {
        if r > threshold {
            if len == 0 {
                start = i;
            }
            len += 1;
            if len > best.1 {
                best = (start, len);
            }
        } else {
            len = 0;
        }
    }
    best
}

/// An episode succeeds when its longest above-threshold streak reaches `streak_length`.
pub fn is_success(rewards: &[f64], threshold: f64, streak_length: usize) -> bool {
    longest_streak(rewards, threshold).1 >= streak_length
}
