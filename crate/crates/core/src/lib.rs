//! Soft-capture of a free-floating tumbling target.
//!
//! A kinematic three-finger gripper must track and envelop a drifting,
//! tumbling box without touching it. The crate bundles everything needed to
//! study that task end to end:
//!
//! - [`spatial`]: quaternion/pose algebra, convex containment, sphere-box proximity
//! - [`dynamics`]: torque-free rigid-body integration and sequential-impulse contacts
//! - [`env`]: the episodic environment (observations, shaped reward, randomization)
//! - [`neural`]: dense MLPs with hand-written backward passes and Adam
//! - [`sac`]: Soft Actor-Critic with twin critics and learned temperature
//! - [`harness`]: train / eval / compare / replay-export runs and their files

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod env;
pub mod error;
pub mod harness;
pub mod neural;
pub mod sac;
pub mod spatial;

pub use error::{Error, Result};
pub use spatial::{
    orientation_error, sphere_obb_query, Contact, ConvexRegion, EulerXYZ, HalfSpace, Obb, Pose, UnitQuaternion, Vec3,
};
