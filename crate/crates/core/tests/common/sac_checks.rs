//! Learner invariants, shared by the mechanics tests and the acceptance report.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use softcap::neural::{adam_step, AdamConfig, AdamState, DenseParams, Matrix};
use softcap::sac::{
    critic_target_with_noise, policy_loss_and_grad, q_values, soft_update, standard_normal, update_temperature, Batch,
    PolicyNet, ReplayBuffer, SacAgent, Temperature, TrainConfig, Transition, TwinCritics, LOG_STD_MAX, LOG_STD_MIN,
};

use super::random_matrix;

pub type Check = Result<(), String>;

pub fn batch(seed: u64, n: usize, obs_dim: usize, act_dim: usize) -> Batch {
    let obs = random_matrix(seed, n, obs_dim, 1.0);
    let next = random_matrix(seed + 1, n, obs_dim, 1.0);
    let act = random_matrix(seed + 2, n, act_dim, 0.9);
    let ts: Vec<Transition> = (0..n)
        .map(|b| Transition {
            obs: obs.row(b).to_vec(),
            action: act.row(b).to_vec(),
            reward: 0.1 * b as f64 - 0.3,
            next_obs: next.row(b).to_vec(),
            done: false,
        })
        .collect();
    Batch::from_transitions(&ts).unwrap()
}

pub fn small_agent(seed: u64, obs_dim: usize, act_dim: usize) -> SacAgent {
    let cfg = TrainConfig {
        hidden_sizes: vec![16, 16],
        seed,
        ..TrainConfig::default()
    };
    SacAgent::new(obs_dim, act_dim, &cfg).unwrap()
}

/// The bootstrap is the element-wise minimum of the two target critics, and
/// inflating one copy cannot lift it above the other.
pub fn twin_min() -> Check {
    let mut agent = small_agent(5, 4, 2);
    let b = batch(6, 16, 4, 2);
    let noise = standard_normal(16, 2, &mut ChaCha8Rng::seed_from_u64(1));
    let gamma = 0.5;
    let y = critic_target_with_noise(&b, &agent.critics, &agent.policy, 0.0, gamma, noise.clone())
        .map_err(|e| e.to_string())?;
    let next = agent
        .policy
        .sample_with_noise(&b.next_obs, noise.clone())
        .map_err(|e| e.to_string())?;
    let q1 = q_values(&agent.critics.target1, &b.next_obs, &next.actions).map_err(|e| e.to_string())?;
    let q2 = q_values(&agent.critics.target2, &b.next_obs, &next.actions).map_err(|e| e.to_string())?;
    if (0..16).any(|i| y[i] != b.rewards[i] + gamma * q1[i].min(q2[i])) {
        return Err("bootstrap is not the twin minimum".into());
    }
    agent.critics.target1.layers.last_mut().unwrap().bias[0] += 1e3;
    let y2 =
        critic_target_with_noise(&b, &agent.critics, &agent.policy, 0.0, gamma, noise).map_err(|e| e.to_string())?;
    if (0..16).any(|i| y2[i] != b.rewards[i] + gamma * q2[i]) {
        return Err("inflated target copy leaked into the bootstrap".into());
    }
    Ok(())
}

/// α stays strictly positive under extreme and alternating log-probabilities.
pub fn alpha_positive() -> Check {
    let cfg = AdamConfig {
        lr: 0.5,
        ..AdamConfig::default()
    };
    for lp in [1e6, -1e6, 0.0, 6.0, -3.0] {
        let mut t = Temperature::new(0.0, -6.0);
        for k in 0..2000 {
            let sign = if k % 7 == 0 { -1.0 } else { 1.0 };
            let a = update_temperature(&mut t, &[sign * lp, lp], &cfg).map_err(|e| e.to_string())?;
            if a.is_nan() || a <= 0.0 {
                return Err(format!("alpha {a} after {k} updates with log pi {lp}"));
            }
        }
    }
    Ok(())
}

/// With frozen online weights, the target gap shrinks by exactly (1 - τ)ⁿ.
pub fn soft_update_decay() -> Check {
    let online = TwinCritics::new(1, 5, 2, &[8, 8]).map_err(|e| e.to_string())?.q1;
    let mut target: DenseParams = TwinCritics::new(2, 5, 2, &[8, 8]).map_err(|e| e.to_string())?.q1;
    let start: Vec<f64> = online
        .to_flat()
        .iter()
        .zip(target.to_flat())
        .map(|(o, t)| t - o)
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tau = 0.005;
    for n in 1..=1000 {
        soft_update(&online, &mut target, tau).map_err(|e| e.to_string())?;
        if n % 100 == 0 {
            let gap: Vec<f64> = online
                .to_flat()
                .iter()
                .zip(target.to_flat())
                .map(|(o, t)| t - o)
                .collect();
            let ratio = norm(&gap) / norm(&start);
            let expect = (1.0 - tau).powi(n);
            if (ratio - expect).abs() > 1e-9 {
                return Err(format!("after {n} updates ratio {ratio} vs {expect}"));
            }
        }
    }
    Ok(())
}

/// Each of 10 slots receives its 1/10 share of 10⁶ draws within 1%.
pub fn replay_uniformity() -> Check {
    let mut b = ReplayBuffer::new(10, 1, 1).map_err(|e| e.to_string())?;
    for k in 0..25 {
        b.push(&[k as f64], &[0.0], 0.0, &[0.0], false)
            .map_err(|e| e.to_string())?;
    }
    let mut counts = [0usize; 10];
    let idx = b
        .sample_indices(1_000_000, &mut ChaCha8Rng::seed_from_u64(11))
        .map_err(|e| e.to_string())?;
    for i in idx {
        counts[i] += 1;
    }
    if counts.iter().any(|&c| (c as f64 - 100_000.0).abs() > 1_000.0) {
        return Err(format!("counts {counts:?}"));
    }
    Ok(())
}

fn constant_critics(obs_dim: usize, act_dim: usize) -> TwinCritics {
    let mut q = DenseParams::zeros(&[obs_dim + act_dim, 4, 1]);
    q.layers[1].bias[0] = 3.0;
    TwinCritics::from_parts(q.clone(), q.clone(), q.clone(), q).unwrap()
}

/// Aggressive updates pushing entropy up, or down, never move log σ out
/// of its clamp or produce NaN log-probabilities.
pub fn log_std_clamp() -> Check {
    let (obs_dim, act_dim) = (3, 2);
    let critics = constant_critics(obs_dim, act_dim);
    let obs: Matrix = random_matrix(7, 32, obs_dim, 1.0);
    let cfg = AdamConfig {
        lr: 0.2,
        ..AdamConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut hit_max, mut hit_min) = (false, false);
    for alpha in [50.0, -50.0] {
        let mut policy = PolicyNet::new(2, obs_dim, &[8], act_dim).map_err(|e| e.to_string())?;
        let mut st = AdamState::new(&policy.params);
        for step in 0..200 {
            let s = policy.sample(&obs, &mut rng).map_err(|e| e.to_string())?;
            let (_, g) = policy_loss_and_grad(&policy, &critics, &obs, &s, alpha).map_err(|e| e.to_string())?;
            adam_step(&mut policy.params, &g, &mut st, &cfg).map_err(|e| e.to_string())?;
            let (_, ls) = policy.distribution(&obs).map_err(|e| e.to_string())?;
            if !ls.as_slice().iter().all(|v| (LOG_STD_MIN..=LOG_STD_MAX).contains(v)) {
                return Err(format!("alpha {alpha}, step {step}: log std out of range"));
            }
            if s.log_probs.iter().any(|l| l.is_nan()) {
                return Err(format!("alpha {alpha}, step {step}: NaN log-prob"));
            }
            hit_max |= ls.as_slice().contains(&LOG_STD_MAX);
            hit_min |= ls.as_slice().contains(&LOG_STD_MIN);
        }
    }
    if !(hit_max && hit_min) {
        return Err(format!("clamp never engaged (max {hit_max}, min {hit_min})"));
    }
    Ok(())
}
