use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{SacAgent, TrainConfig, UpdateStats};
use super::replay::ReplayBuffer;
use crate::env::{EnvConfig, RewardTerms, SoftCaptureEnv, ACTION_DIM};
use crate::error::{Error, Result};
use crate::neural::checkpoint::{put_u32, put_u64, ByteReader};

const AGENT_MAGIC: [u8; 4] = *b"SCSA";
const AGENT_VERSION: u32 = 1;

pub const AGENT_FILE: &str = "agent.ckpt";
pub const REPLAY_FILE: &str = "replay.bin";

/// One row of the training metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// 1-based episode number.
    pub episode: usize,
    pub total_steps: u64,
    pub episode_return: f64,
    pub r_dist: f64,
    pub r_align: f64,
    pub r_surr: f64,
    pub r_contact: f64,
    pub success: u8,
    pub longest_streak: usize,
    pub updates: u64,
    /// Means over this episode's updates; empty when none ran.
    pub critic_loss: Option<f64>,
    pub policy_loss: Option<f64>,
    pub entropy: Option<f64>,
    pub alpha: f64,
}

/// Reset seed for the environment and the agent's random stream for one
/// episode. Both depend only on `(seed, episode)`, so runs can resume at any
/// episode boundary and paired runs see the same initial conditions.
pub fn episode_streams(seed: u64, episode: usize) -> (u64, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    let env_seed = rng.random();
    (env_seed, rng)
}

/// Counters saved alongside the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Progress {
    pub episodes_done: usize,
    pub total_steps: u64,
}

pub fn save_agent(path: &Path, agent: &SacAgent, progress: Progress) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&AGENT_MAGIC);
    put_u32(&mut buf, AGENT_VERSION);
    put_u64(&mut buf, progress.episodes_done as u64);
    put_u64(&mut buf, progress.total_steps);
    agent.encode(&mut buf);
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_agent(path: &Path) -> Result<(SacAgent, Progress)> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = ByteReader::new(&data);
    let parsed = (|| {
        r.expect_magic(&AGENT_MAGIC)?;
        let version = r.u32()?;
        if version != AGENT_VERSION {
            return Err(format!("unsupported agent format version {version}"));
        }
        let progress = Progress {
            episodes_done: r.u64()? as usize,
            total_steps: r.u64()?,
        };
        let agent = SacAgent::decode(&mut r)?;
        if r.remaining() != 0 {
            return Err(format!("{} trailing bytes", r.remaining()));
        }
        Ok((agent, progress))
    })();
    parsed.map_err(corrupt)
}

/// Stateful training loop; advances one episode per call.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    env: SoftCaptureEnv,
    agent: SacAgent,
    buffer: ReplayBuffer,
    progress: Progress,
}

#[derive(Default)]
struct UpdateSums {
    n: usize,
    critic: f64,
    policy: f64,
    entropy: f64,
}

impl UpdateSums {
    fn add(&mut self, s: &UpdateStats) {
        self.n += 1;
        self.critic += 0.5 * (s.critic1_loss + s.critic2_loss);
        self.policy += s.policy_loss;
        self.entropy += s.entropy;
    }

    fn mean(&self, x: f64) -> Option<f64> {
        (self.n > 0).then(|| x / self.n as f64)
    }
}

impl Trainer {
    pub fn new(env_config: EnvConfig, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let env = SoftCaptureEnv::new(env_config)?;
        let agent = SacAgent::new(env.obs_dim(), ACTION_DIM, &config)?;
        let buffer = ReplayBuffer::new(config.buffer_capacity, env.obs_dim(), ACTION_DIM)?;
        Ok(Trainer {
            config,
            env,
            agent,
            buffer,
            progress: Progress::default(),
        })
    }

    /// Restores a trainer from a directory written by [`Trainer::save_checkpoint`].
    pub fn resume(env_config: EnvConfig, config: TrainConfig, dir: &Path) -> Result<Self> {
        let mut t = Trainer::new(env_config, config)?;
        let agent_path = dir.join(AGENT_FILE);
        let (agent, progress) = load_agent(&agent_path)?;
        let buffer = ReplayBuffer::load(&dir.join(REPLAY_FILE))?;
        let obs_dim = t.env.obs_dim();
        if agent.policy.obs_dim() != obs_dim || buffer.obs_dim() != obs_dim {
            return Err(Error::Checkpoint {
                path: agent_path,
                reason: format!(
                    "checkpoint observation width {} does not match the configured {obs_dim}",
                    agent.policy.obs_dim()
                ),
            });
        }
        if agent.policy.params.sizes()[1..agent.policy.params.layers.len()] != t.config.hidden_sizes[..] {
            return Err(Error::Checkpoint {
                path: agent_path,
                reason: "checkpoint hidden sizes differ from the configuration".into(),
            });
        }
        t.agent = agent;
        t.buffer = buffer;
        t.progress = progress;
        Ok(t)
    }

    pub fn save_checkpoint(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_agent(&dir.join(AGENT_FILE), &self.agent, self.progress)?;
        self.buffer.save(&dir.join(REPLAY_FILE))
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn agent(&self) -> &SacAgent {
        &self.agent
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn progress(&self) -> Progress {
        self.progress
    }

    pub fn is_finished(&self) -> bool {
        self.progress.episodes_done >= self.config.episodes
    }

    /// Plays one full episode, updating the agent every `train_freq` steps once
    /// warmup is over.
    pub fn run_episode(&mut self) -> Result<EpisodeMetrics> {
        let cfg = &self.config;
        let episode = self.progress.episodes_done;
        let (env_seed, mut rng) = episode_streams(cfg.seed, episode);
        let mut obs = self.env.reset(env_seed);
        let mut terms = RewardTerms::default();
        let mut sums = UpdateSums::default();

        while !self.env.is_done() {
            let mut action = [0.0; ACTION_DIM];
            if self.progress.total_steps < cfg.warmup_steps as u64 {
                for a in &mut action {
                    *a = rng.random_range(-1.0..=1.0);
                }
            } else {
                let (a, _) = self.agent.policy.sample_action(obs.as_slice(), &mut rng)?;
                action.copy_from_slice(&a);
            }
            let res = self.env.step(&action)?;
            // Episodes only end on the time limit, so the bootstrap is kept.
            self.buffer
                .push(obs.as_slice(), &action, res.reward, res.obs.as_slice(), false)?;
            terms.r_dist += res.terms.r_dist;
            terms.r_align += res.terms.r_align;
            terms.r_surr += res.terms.r_surr;
            terms.r_contact += res.terms.r_contact;
            obs = res.obs;
            self.progress.total_steps += 1;

            let t = self.progress.total_steps;
            if t >= cfg.warmup_steps as u64 && t.is_multiple_of(cfg.train_freq as u64) {
                let batch = self.buffer.sample(cfg.batch_size, &mut rng)?;
                let stats = self.agent.update(&batch, &mut rng)?;
                sums.add(&stats);
            }
        }

        self.progress.episodes_done += 1;
        let env_cfg = self.env.config();
        let (_, streak) = crate::env::longest_streak(self.env.episode_rewards(), env_cfg.success_reward_threshold);
        Ok(EpisodeMetrics {
            episode: self.progress.episodes_done,
            total_steps: self.progress.total_steps,
            episode_return: self.env.episode_rewards().iter().sum(),
            r_dist: terms.r_dist,
            r_align: terms.r_align,
            r_surr: terms.r_surr,
            r_contact: terms.r_contact,
            success: u8::from(self.env.episode_success()),
            longest_streak: streak,
            updates: self.agent.updates,
            critic_loss: sums.mean(sums.critic),
            policy_loss: sums.mean(sums.policy),
            entropy: sums.mean(sums.entropy),
            alpha: self.agent.temperature.alpha(),
        })
    }
}

/// Trains for `config.episodes` episodes, handing each episode's metrics to
/// `on_episode`; returns the final agent.
pub fn train(
    env_config: EnvConfig,
    config: TrainConfig,
    mut on_episode: impl FnMut(&EpisodeMetrics) -> Result<()>,
) -> Result<SacAgent> {
    let mut t = Trainer::new(env_config, config)?;
    while !t.is_finished() {
        let m = t.run_episode()?;
        on_episode(&m)?;
    }
    Ok(t.agent)
}
