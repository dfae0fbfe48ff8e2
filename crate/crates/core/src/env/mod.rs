//! The soft-capture episode: randomized reset, noisy actions, physics
//! substeps, shaped reward and observation assembly.

mod config;
mod observation;
mod reward;
pub mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    apply_gripper_action, box_inertia, detect_contacts, resolve_contacts, step_free_body, GripperBody, RigidBody,
};
use crate::error::{Error, Result};
use crate::spatial::{EulerXYZ, Obb, Pose, UnitQuaternion, Vec3};

pub use config::{EnvConfig, RandomizationSpec, Range3};
pub use observation::{
    assemble_observation, layout, min_distance_per_axis, Observation, ObservationNoise, BASE_OBS_DIM,
};
pub use reward::{compute_reward, is_success, longest_streak, one_minus_tanh, RewardParams, RewardTerms};
pub use trace::TraceRecord;

pub const ACTION_DIM: usize = 6;

/// Everything the reward and observation are computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub gripper: GripperBody,
    pub target: RigidBody,
    pub target_half_extents: Vec3,
}

impl WorldState {
    pub fn target_box(&self) -> Obb {
        Obb::new(self.target.pose, self.target_half_extents)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    /// Current run of consecutive steps above the success threshold.
    pub success_streak: usize,
    /// Total normal contact force over this control step, N.
    pub contact_force: f64,
    /// Action after noise and clipping.
    pub applied_action: [f64; ACTION_DIM],
    /// Contacts detected, summed over physics substeps.
    pub contacts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    pub terms: RewardTerms,
    pub done: bool,
    pub info: StepInfo,
}

/// One soft-capture environment instance. Single-threaded; independent
/// instances may run in parallel.
#[derive(Debug, Clone)]
pub struct SoftCaptureEnv {
    config: EnvConfig,
    world: WorldState,
    rng: ChaCha8Rng,
    step_count: usize,
    streak: usize,
    rewards: Vec<f64>,
    started: bool,
}

fn sample_range(rng: &mut impl Rng, r: &Range3) -> Vec3 {
    let mut pick = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let x = pick(r.min.x, r.max.x);
    let y = pick(r.min.y, r.max.y);
    let z = pick(r.min.z, r.max.z);
    Vec3::new(x, y, z)
}

impl SoftCaptureEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let target = RigidBody {
            pose: Pose::default(),
            lin_vel: Vec3::ZERO,
            ang_vel: Vec3::ZERO,
            mass: config.randomization.target_mass[0],
            inertia_diag: box_inertia(config.randomization.target_mass[0], config.target_half_extents),
        };
        let gripper = GripperBody::new(Pose::from_position(config.gripper_start), &config.gripper_geometry)?;
        Ok(SoftCaptureEnv {
            world: WorldState {
                gripper,
                target,
                target_half_extents: config.target_half_extents,
            },
            config,
            rng: ChaCha8Rng::seed_from_u64(0),
            step_count: 0,
            streak: 0,
            rewards: Vec::new(),
            started: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn obs_dim(&self) -> usize {
        self.config.obs_dim()
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn is_done(&self) -> bool {
        self.started && self.step_count >= self.config.episode_length
    }

    /// Rewards collected so far this episode.
    pub fn episode_rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn episode_success(&self) -> bool {
        is_success(
            &self.rewards,
            self.config.success_reward_threshold,
            self.config.success_streak_length,
        )
    }

    pub fn reward_params(&self) -> RewardParams {
        RewardParams {
            containment_margin: self.config.containment_margin,
            goal_offset: self.goal_offset(),
        }
    }

    fn goal_offset(&self) -> UnitQuaternion {
        UnitQuaternion::from_euler_xyz(self.config.goal_orientation_offset)
    }

    fn noise(&self) -> ObservationNoise {
        ObservationNoise {
            position: self.config.randomization.obs_position_noise,
            velocity: self.config.randomization.obs_velocity_noise,
        }
    }

    /// Starts a new episode. Draw order: target position, linear velocity,
    /// angular velocity, mass, then gripper orientation.
    pub fn reset(&mut self, seed: u64) -> Observation {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = self.config.randomization;

        let position = sample_range(&mut self.rng, &spec.target_position);
        let lin_vel = sample_range(&mut self.rng, &spec.target_lin_vel);
        let mut ang_vel = sample_range(&mut self.rng, &spec.target_ang_vel);
        let [m_lo, m_hi] = spec.target_mass;
        let mass = m_lo + (m_hi - m_lo) * self.rng.random::<f64>();
        let euler = sample_range(&mut self.rng, &spec.gripper_orientation);

        let target_orientation = UnitQuaternion::IDENTITY;
        let mut gripper_orientation = UnitQuaternion::from_euler_xyz(EulerXYZ::from_vec3(euler));
        if self.config.translation_only {
            ang_vel = Vec3::ZERO;
            gripper_orientation = target_orientation * self.goal_offset();
        }

        self.world.target = RigidBody {
            pose: Pose::new(position, target_orientation),
            lin_vel,
            ang_vel,
            mass,
            inertia_diag: box_inertia(mass, self.config.target_half_extents),
        };
        let g = &mut self.world.gripper;
        g.pose = Pose::new(self.config.gripper_start, gripper_orientation);
        g.lin_vel = Vec3::ZERO;
        g.ang_vel = Vec3::ZERO;

        self.step_count = 0;
        self.streak = 0;
        self.rewards.clear();
        self.started = true;
        self.observe(0.0)
    }

    /// Overrides the world state mid-episode (tests and scripted scenarios).
    pub fn set_world(&mut self, gripper_pose: Pose, target: RigidBody) {
        self.world.gripper.pose = gripper_pose;
        self.world.gripper.lin_vel = Vec3::ZERO;
        self.world.gripper.ang_vel = Vec3::ZERO;
        self.world.target = target;
    }

    fn observe(&mut self, force: f64) -> Observation {
        let tactile = self.config.tactile_enabled.then_some(force);
        let (goal, noise) = (self.goal_offset(), self.noise());
        assemble_observation(&self.world, goal, tactile, noise, &mut self.rng)
    }

    /// Perturbs, clips and masks an agent action. Always consumes six draws.
    fn perturb_action(&mut self, action: &[f64; ACTION_DIM]) -> [f64; ACTION_DIM] {
        let frac = self.config.action_noise_fraction;
        let mut out = [0.0; ACTION_DIM];
        for (o, &a) in out.iter_mut().zip(action) {
            let u: f64 = self.rng.random();
            *o = (a + frac * a.abs() * (2.0 * u - 1.0)).clamp(-1.0, 1.0);
        }
        if self.config.translation_only {
            out[3..].fill(0.0);
        }
        out
    }

    /// Advances one control step.
    pub fn step(&mut self, action: &[f64; ACTION_DIM]) -> Result<StepResult> {
        if !self.started {
            return Err(Error::contract("step called before reset"));
        }
        if self.is_done() {
            return Err(Error::contract("step called after the episode finished"));
        }
        if let Some(a) = action.iter().find(|a| !(a.abs() <= 1.0)) {
            return Err(Error::contract(format!("action component {a} outside [-1, 1]")));
        }
        let applied = self.perturb_action(action);

        let substeps = self.config.physics_substeps;
        let dt = self.config.control_dt / substeps as f64;
        let limits = self.config.action_limits.scaled(1.0 / substeps as f64);
        let mut impulse = 0.0;
        let mut contacts = 0;
        for _ in 0..substeps {
            self.world.gripper = apply_gripper_action(&self.world.gripper, &applied, &limits, dt)?;
            let bx = self.world.target_box();
            let found = detect_contacts(&self.world.gripper, &bx);
            if !found.is_empty() {
                contacts += found.len();
                let g = &self.world.gripper;
                let (target, res) = resolve_contacts(
                    &self.world.target,
                    &bx,
                    &found,
                    |p| g.point_velocity(p),
                    dt,
                    &self.config.solver,
                );
                self.world.target = target;
                if self.config.translation_only {
                    self.world.target.ang_vel = Vec3::ZERO;
                }
                impulse += res.total_normal_impulse;
            }
            self.world.target = step_free_body(&self.world.target, dt);
        }
        let force = impulse / self.config.control_dt;

        let terms = compute_reward(&self.world, force, &self.reward_params());
        let reward = terms.total();
        self.rewards.push(reward);
        self.streak = if reward > self.config.success_reward_threshold {
            self.streak + 1
        } else {
            0
        };
        self.step_count += 1;

        let obs = self.observe(force);
        Ok(StepResult {
            obs,
            reward,
            terms,
            done: self.step_count == self.config.episode_length,
            info: StepInfo {
                success_streak: self.streak,
                contact_force: force,
                applied_action: applied,
                contacts,
            },
        })
    }
}
