//! Soft Actor-Critic: squashed-Gaussian policy, twin critics with target
//! copies, learned entropy temperature, uniform replay, and the episode loop
//! that drives the soft-capture environment.

mod agent;
mod critic;
mod policy;
mod replay;
mod train;

pub use agent::{
    critic_target, critic_target_with_noise, policy_loss_and_grad, temperature_grad, update_temperature, SacAgent,
    Temperature, TrainConfig, UpdateStats, LOG_ALPHA_MAX, LOG_ALPHA_MIN,
};
pub use critic::{critic_loss_and_grad, q_values, soft_update, TwinCritics};
pub use policy::{
    log_tanh_jacobian, softplus, squashed_log_prob, standard_normal, PolicyNet, PolicySample, LOG_STD_MAX, LOG_STD_MIN,
};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use train::{
    episode_streams, load_agent, save_agent, train, EpisodeMetrics, Progress, Trainer, AGENT_FILE, REPLAY_FILE,
};
