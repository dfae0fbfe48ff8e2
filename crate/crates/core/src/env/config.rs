use serde::{Deserialize, Serialize};

use crate::dynamics::{ActionLimits, GripperGeometry, SolverParams};
use crate::error::{Error, Result};
use crate::spatial::{EulerXYZ, Vec3};

/// Closed interval per axis; `min == max` pins the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Range3 {
    pub const fn symmetric(half: f64) -> Self {
        Range3 {
            min: Vec3::splat(-half),
            max: Vec3::splat(half),
        }
    }

    pub fn around(center: Vec3, half: Vec3) -> Self {
        Range3 {
            min: center - half,
            max: center + half,
        }
    }

    pub fn midpoint(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::config(format!("{name}: non-finite bound")));
        }
        for i in 0..3 {
            if self.min[i] > self.max[i] {
                return Err(Error::config(format!(
                    "{name}: min {:?} exceeds max {:?}",
                    self.min, self.max
                )));
            }
        }
        Ok(())
    }
}

/// Per-episode domain randomization and observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomizationSpec {
    pub target_position: Range3,
    /// Euler-XYZ bounds, rad.
    pub gripper_orientation: Range3,
    pub target_lin_vel: Range3,
    /// Body-frame bounds, rad/s.
    pub target_ang_vel: Range3,
    /// `[min, max]` kg.
    pub target_mass: [f64; 2],
    /// Uniform half-width on observed target position, m.
    pub obs_position_noise: f64,
    /// Uniform half-width on observed target linear (m/s) and angular (rad/s) velocity.
    pub obs_velocity_noise: f64,
}

impl Default for RandomizationSpec {
    fn default() -> Self {
        RandomizationSpec {
            target_position: Range3::around(Vec3::new(0.0, 0.0, 0.6), Vec3::splat(0.2)),
            gripper_orientation: Range3::symmetric(15f64.to_radians()),
            target_lin_vel: Range3::symmetric(0.02),
            target_ang_vel: Range3::symmetric(0.09),
            target_mass: [0.5, 2.0],
            obs_position_noise: 0.005,
            obs_velocity_noise: 0.005,
        }
    }
}

impl RandomizationSpec {
    /// Every range collapsed to its midpoint and all noise removed.
    pub fn degenerate(&self) -> Self {
        let pin = |r: Range3| {
            let m = r.midpoint();
            Range3 { min: m, max: m }
        };
        let m = 0.5 * (self.target_mass[0] + self.target_mass[1]);
        RandomizationSpec {
            target_position: pin(self.target_position),
            gripper_orientation: pin(self.gripper_orientation),
            target_lin_vel: pin(self.target_lin_vel),
            target_ang_vel: pin(self.target_ang_vel),
            target_mass: [m, m],
            obs_position_noise: 0.0,
            obs_velocity_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.target_position.validate("target_position")?;
        self.gripper_orientation.validate("gripper_orientation")?;
        self.target_lin_vel.validate("target_lin_vel")?;
        self.target_ang_vel.validate("target_ang_vel")?;
        let [lo, hi] = self.target_mass;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::config(format!(
                "target_mass must satisfy 0 < min <= max, got [{lo}, {hi}]"
            )));
        }
        for (name, v) in [
            ("obs_position_noise", self.obs_position_noise),
            ("obs_velocity_noise", self.obs_velocity_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Append the total normal contact force as observation entry 39.
    pub tactile_enabled: bool,
    pub episode_length: usize,
    /// Seconds per control step.
    pub control_dt: f64,
    pub physics_substeps: usize,
    pub action_limits: ActionLimits,
    pub randomization: RandomizationSpec,
    /// Inward margin applied when testing box corners against the finger region, m.
    pub containment_margin: f64,
    pub success_reward_threshold: f64,
    pub success_streak_length: usize,
    /// Each action component is perturbed by up to this fraction of its magnitude.
    pub action_noise_fraction: f64,
    pub target_half_extents: Vec3,
    pub gripper_start: Vec3,
    /// Orientation the gripper should hold relative to the target frame.
    pub goal_orientation_offset: EulerXYZ,
    pub gripper_geometry: GripperGeometry,
    pub solver: SolverParams,
    /// Diagnostic variant: rotation actions ignored, the target never rotates
    /// (contacts move it but do not spin it), and the gripper starts aligned
    /// with its goal orientation.
    pub translation_only: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            tactile_enabled: false,
            episode_length: 500,
            control_dt: 1.0 / 60.0,
            physics_substeps: 4,
            action_limits: ActionLimits::default(),
            randomization: RandomizationSpec::default(),
            containment_margin: 0.005,
            success_reward_threshold: 2.0,
            success_streak_length: 200,
            action_noise_fraction: 0.10,
            target_half_extents: Vec3::new(0.06, 0.04, 0.05),
            gripper_start: Vec3::ZERO,
            goal_orientation_offset: EulerXYZ::default(),
            gripper_geometry: GripperGeometry::default(),
            solver: SolverParams::default(),
            translation_only: false,
        }
    }
}

impl EnvConfig {
    pub fn with_tactile(mut self, on: bool) -> Self {
        self.tactile_enabled = on;
        self
    }

    /// Observation width: 39, or 40 with the tactile channel.
    pub fn obs_dim(&self) -> usize {
        super::BASE_OBS_DIM + usize::from(self.tactile_enabled)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episode_length == 0 {
            return Err(Error::config("episode_length must be >= 1"));
        }
        if self.episode_length < self.success_streak_length {
            return Err(Error::config(format!(
                "episode_length {} shorter than success_streak_length {}",
                self.episode_length, self.success_streak_length
            )));
        }
        if !(self.control_dt > 0.0 && self.control_dt.is_finite()) {
            return Err(Error::config(format!(
                "control_dt must be > 0, got {}",
                self.control_dt
            )));
        }
        if self.physics_substeps == 0 {
            return Err(Error::config("physics_substeps must be >= 1"));
        }
        self.action_limits.validate()?;
        self.randomization.validate()?;
        if !(self.containment_margin >= 0.0 && self.containment_margin.is_finite()) {
            return Err(Error::config("containment_margin must be >= 0"));
        }
        if !self.success_reward_threshold.is_finite() {
            return Err(Error::config("success_reward_threshold must be finite"));
        }
        if !(0.0..1.0).contains(&self.action_noise_fraction) {
            return Err(Error::config(format!(
                "action_noise_fraction must lie in [0, 1), got {}",
                self.action_noise_fraction
            )));
        }
        let he = self.target_half_extents;
        if !(he.x > 0.0 && he.y > 0.0 && he.z > 0.0 && he.is_finite()) {
            return Err(Error::config("target_half_extents must be positive"));
        }
        if !self.gripper_start.is_finite() {
            return Err(Error::config("gripper_start must be finite"));
        }
        if self.solver.iterations == 0 || !(self.solver.baumgarte >= 0.0) {
            return Err(Error::config("solver needs >= 1 iteration and baumgarte >= 0"));
        }
        Ok(())
    }
}
