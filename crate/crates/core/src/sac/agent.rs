use rand::Rng;
use serde::{Deserialize, Serialize};

use super::critic::{critic_loss_and_grad, soft_update, TwinCritics};
use super::policy::{standard_normal, PolicyNet, PolicySample};
use super::replay::Batch;
use crate::error::{Error, Result};
use crate::neural::checkpoint::{decode_params, encode_params, put_f64, put_u64, ByteReader};
use crate::neural::{adam_step, adam_step_scalar, AdamConfig, AdamState, DenseParams, Matrix, ScalarAdamState};

/// Learner hyperparameters and run length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    /// Environment steps between gradient updates.
    pub train_freq: usize,
    /// Shared by the policy, both critics and the temperature.
    pub learning_rate: f64,
    /// Uniform-random environment steps before the first update.
    pub warmup_steps: usize,
    pub buffer_capacity: usize,
    pub hidden_sizes: Vec<usize>,
    pub target_entropy: f64,
    pub initial_log_alpha: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 40_000,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 1024,
            train_freq: 4,
            learning_rate: 3e-4,
            warmup_steps: 5000,
            buffer_capacity: 1_000_000,
            hidden_sizes: vec![256, 256],
            target_entropy: -6.0,
            initial_log_alpha: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if self.batch_size == 0 || self.train_freq == 0 || self.buffer_capacity == 0 {
            return Err(Error::config("batch_size, train_freq and buffer_capacity must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::config(format!("invalid hidden_sizes {:?}", self.hidden_sizes)));
        }
        if !self.target_entropy.is_finite() || !self.initial_log_alpha.is_finite() {
            return Err(Error::config("target_entropy and initial_log_alpha must be finite"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// Bounds on `log_alpha` keeping `exp(log_alpha)` a positive, finite f64.
pub const LOG_ALPHA_MIN: f64 = -700.0;
pub const LOG_ALPHA_MAX: f64 = 700.0;

/// Entropy temperature, stored in log space so `α = exp(log_alpha)` stays positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature {
    pub log_alpha: f64,
    pub target_entropy: f64,
    pub adam: ScalarAdamState,
}

impl Temperature {
    pub fn new(log_alpha: f64, target_entropy: f64) -> Self {
        Temperature {
            log_alpha,
            target_entropy,
            adam: ScalarAdamState::default(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }
}

/// Gradient of `mean(-log_alpha · (log π + H̄))` with respect to `log_alpha`.
pub fn temperature_grad(log_probs: &[f64], target_entropy: f64) -> f64 {
    let n = log_probs.len().max(1) as f64;
    -log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>() / n
}

/// One Adam step on `log_alpha`; returns the new α.
pub fn update_temperature(t: &mut Temperature, log_probs: &[f64], cfg: &AdamConfig) -> Result<f64> {
    let g = temperature_grad(log_probs, t.target_entropy);
    adam_step_scalar(&mut t.log_alpha, g, &mut t.adam, cfg)?;
    t.log_alpha = t.log_alpha.clamp(LOG_ALPHA_MIN, LOG_ALPHA_MAX);
    Ok(t.alpha())
}

/// Soft Bellman targets `r + γ(1 − done)(min Q̄(s′, a′) − α log π(a′|s′))`
/// with `a′` drawn from the policy using the given noise.
pub fn critic_target_with_noise(
    batch: &Batch,
    critics: &TwinCritics,
    policy: &PolicyNet,
    alpha: f64,
    gamma: f64,
    noise: Matrix,
) -> Result<Vec<f64>> {
    let next = policy.sample_with_noise(&batch.next_obs, noise)?;
    let q = critics.target_min(&batch.next_obs, &next.actions)?;
    Ok((0..batch.len())
        .map(|b| {
            let v = q[b] - alpha * next.log_probs[b];
            batch.rewards[b] + gamma * (1.0 - batch.dones[b]) * v
        })
        .collect())
}

pub fn critic_target(
    batch: &Batch,
    critics: &TwinCritics,
    policy: &PolicyNet,
    alpha: f64,
    gamma: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let noise = standard_normal(batch.len(), policy.action_dim(), rng);
    critic_target_with_noise(batch, critics, policy, alpha, gamma, noise)
}

/// Policy objective `mean(α log π(a|s) − min_j Q_j(s, a))` on a reparameterised
/// sample, and its gradient with respect to the policy parameters.
pub fn policy_loss_and_grad(
    policy: &PolicyNet,
    critics: &TwinCritics,
    obs: &Matrix,
    sample: &PolicySample,
    alpha: f64,
) -> Result<(f64, DenseParams)> {
    let n = obs.rows();
    let (min_q, dq) = critics.min_q_action_grad(obs, &sample.actions)?;
    let inv = 1.0 / n as f64;
    let loss = (0..n).map(|b| alpha * sample.log_probs[b] - min_q[b]).sum::<f64>() * inv;
    let mut g_act = dq;
    for g in g_act.as_mut_slice() {
        *g *= -inv;
    }
    let g_lp = vec![alpha * inv; n];
    Ok((loss, policy.backward_sample(sample, &g_act, &g_lp)?.params))
}

/// Diagnostics from one gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub policy_loss: f64,
    /// α after the temperature step.
    pub alpha: f64,
    /// `-mean(log π)` of the batch sample.
    pub entropy: f64,
}

/// Policy, twin critics, temperature and their optimizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct SacAgent {
    pub policy: PolicyNet,
    pub critics: TwinCritics,
    pub temperature: Temperature,
    pub policy_adam: AdamState,
    pub q1_adam: AdamState,
    pub q2_adam: AdamState,
    pub adam: AdamConfig,
    pub gamma: f64,
    pub tau: f64,
    /// Gradient updates performed so far.
    pub updates: u64,
}

fn finite(v: f64, what: &str, step: u64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            what: what.into(),
            step,
        })
    }
}

impl SacAgent {
    pub fn new(obs_dim: usize, action_dim: usize, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let policy = PolicyNet::new(cfg.seed, obs_dim, &cfg.hidden_sizes, action_dim)?;
        let critics = TwinCritics::new(cfg.seed.wrapping_add(1), obs_dim, action_dim, &cfg.hidden_sizes)?;
        Ok(SacAgent {
            policy_adam: AdamState::new(&policy.params),
            q1_adam: AdamState::new(&critics.q1),
            q2_adam: AdamState::new(&critics.q2),
            policy,
            critics,
            temperature: Temperature::new(cfg.initial_log_alpha, cfg.target_entropy),
            adam: cfg.adam(),
            gamma: cfg.gamma,
            tau: cfg.tau,
            updates: 0,
        })
    }

    /// One SAC update: temperature, both critics, policy, then target tracking.
    /// The critic targets and the policy loss use α from before this update.
    pub fn update(&mut self, batch: &Batch, rng: &mut impl Rng) -> Result<UpdateStats> {
        let step = self.updates;
        let sample = self.policy.sample(&batch.obs, rng)?;
        let alpha = self.temperature.alpha();
        let new_alpha = update_temperature(&mut self.temperature, &sample.log_probs, &self.adam)?;
        finite(new_alpha, "temperature", step)?;

        let y = critic_target(batch, &self.critics, &self.policy, alpha, self.gamma, rng)?;
        let (l1, g1) = critic_loss_and_grad(&self.critics.q1, &batch.obs, &batch.actions, &y)?;
        let (l2, g2) = critic_loss_and_grad(&self.critics.q2, &batch.obs, &batch.actions, &y)?;
        finite(l1, "critic 1 loss", step)?;
        finite(l2, "critic 2 loss", step)?;
        adam_step(&mut self.critics.q1, &g1, &mut self.q1_adam, &self.adam)?;
        adam_step(&mut self.critics.q2, &g2, &mut self.q2_adam, &self.adam)?;

        let (pl, pg) = policy_loss_and_grad(&self.policy, &self.critics, &batch.obs, &sample, alpha)?;
        finite(pl, "policy loss", step)?;
        adam_step(&mut self.policy.params, &pg, &mut self.policy_adam, &self.adam)?;

        soft_update(&self.critics.q1, &mut self.critics.target1, self.tau)?;
        soft_update(&self.critics.q2, &mut self.critics.target2, self.tau)?;
        self.updates += 1;

        let n = sample.log_probs.len().max(1) as f64;
        Ok(UpdateStats {
            critic1_loss: l1,
            critic2_loss: l2,
            policy_loss: pl,
            alpha: new_alpha,
            entropy: -sample.log_probs.iter().sum::<f64>() / n,
        })
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        put_u64(buf, self.policy.action_dim() as u64);
        put_u64(buf, self.updates);
        put_f64(buf, self.gamma);
        put_f64(buf, self.tau);
        for x in [self.adam.lr, self.adam.beta1, self.adam.beta2, self.adam.eps] {
            put_f64(buf, x);
        }
        let t = &self.temperature;
        for x in [t.log_alpha, t.target_entropy, t.adam.m, t.adam.v] {
            put_f64(buf, x);
        }
        put_u64(buf, t.adam.t);
        encode_params(&self.policy.params, buf);
        for p in [
            &self.critics.q1,
            &self.critics.q2,
            &self.critics.target1,
            &self.critics.target2,
        ] {
            encode_params(p, buf);
        }
        for s in [&self.policy_adam, &self.q1_adam, &self.q2_adam] {
            put_u64(buf, s.t);
            encode_params(&s.m, buf);
            encode_params(&s.v, buf);
        }
    }

    pub fn decode(r: &mut ByteReader<'_>) -> std::result::Result<Self, String> {
        let action_dim = r.u64()? as usize;
        let updates = r.u64()?;
        let gamma = r.f64()?;
        let tau = r.f64()?;
        let adam = AdamConfig {
            lr: r.f64()?,
            beta1: r.f64()?,
            beta2: r.f64()?,
            eps: r.f64()?,
        };
        let mut temperature = Temperature::new(r.f64()?, r.f64()?);
        temperature.adam.m = r.f64()?;
        temperature.adam.v = r.f64()?;
        temperature.adam.t = r.u64()?;
        let policy = PolicyNet::from_params(decode_params(r)?, action_dim).map_err(|e| e.to_string())?;
        let q1 = decode_params(r)?;
        let q2 = decode_params(r)?;
        let t1 = decode_params(r)?;
        let t2 = decode_params(r)?;
        let critics = TwinCritics::from_parts(q1, q2, t1, t2).map_err(|e| e.to_string())?;
        let mut states = Vec::with_capacity(3);
        for like in [&policy.params, &critics.q1, &critics.q2] {
            let t = r.u64()?;
            let m = decode_params(r)?;
            let v = decode_params(r)?;
            if !m.same_shape(like) || !v.same_shape(like) {
                return Err("optimizer state shape does not match its network".into());
            }
            states.push(AdamState { m, v, t });
        }
        if critics.q1.input_dim() != policy.obs_dim() + action_dim {
            return Err("critic input width does not match the policy".into());
        }
        let q2_adam = states.pop().unwrap();
        let q1_adam = states.pop().unwrap();
        let policy_adam = states.pop().unwrap();
        Ok(SacAgent {
            policy,
            critics,
            temperature,
            policy_adam,
            q1_adam,
            q2_adam,
            adam,
            gamma,
            tau,
            updates,
        })
    }
}
