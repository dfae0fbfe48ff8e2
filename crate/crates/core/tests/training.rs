use softcap::env::EnvConfig;
use softcap::sac::{load_agent, save_agent, train, EpisodeMetrics, Progress, TrainConfig, Trainer};

fn short_env() -> EnvConfig {
    EnvConfig {
        episode_length: 60,
        success_streak_length: 20,
        ..EnvConfig::default()
    }
}

fn tiny(episodes: usize, warmup: usize) -> TrainConfig {
    TrainConfig {
        episodes,
        batch_size: 16,
        warmup_steps: warmup,
        hidden_sizes: vec![16, 16],
        seed: 42,
        ..TrainConfig::default()
    }
}

fn run(env: EnvConfig, cfg: TrainConfig) -> Vec<EpisodeMetrics> {
    let mut rows = Vec::new();
    train(env, cfg, |m| {
        rows.push(m.clone());
        Ok(())
    })
    .unwrap();
    rows
}

#[test]
fn warmup_runs_without_updates() {
    let rows = run(short_env(), tiny(3, 1000));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|m| m.updates == 0 && m.critic_loss.is_none()));
    assert_eq!(rows[2].total_steps, 180);
}

#[test]
fn updates_follow_train_freq_after_warmup() {
    let rows = run(short_env(), tiny(3, 60));
    assert_eq!(rows[0].updates, 1);
    // Steps 64, 68, ..., 120 in the second episode.
    assert_eq!(rows[1].updates, 1 + 15);
    assert_eq!(rows[2].updates, 1 + 30);
    assert!(rows[2].critic_loss.unwrap().is_finite());
    assert!(rows[2].alpha > 0.0);
}

#[test]
fn identical_seeds_give_identical_metrics() {
    let a = run(short_env(), tiny(4, 100));
    let b = run(short_env(), tiny(4, 100));
    assert_eq!(a, b);
    let mut other = tiny(4, 100);
    other.seed = 43;
    assert_ne!(a, run(short_env(), other));
}

#[test]
fn resume_reproduces_the_uninterrupted_stream() {
    let reference = run(short_env(), tiny(5, 100));
    let dir = tempfile::tempdir().unwrap();

    let mut t = Trainer::new(short_env(), tiny(5, 100)).unwrap();
    let mut rows = vec![t.run_episode().unwrap(), t.run_episode().unwrap()];
    t.save_checkpoint(dir.path()).unwrap();
    drop(t);

    let mut t = Trainer::resume(short_env(), tiny(5, 100), dir.path()).unwrap();
    assert_eq!(t.progress().episodes_done, 2);
    while !t.is_finished() {
        rows.push(t.run_episode().unwrap());
    }
    assert_eq!(rows, reference);
}

#[test]
fn agent_checkpoint_round_trips_exactly() {
    let mut t = Trainer::new(short_env(), tiny(2, 30)).unwrap();
    t.run_episode().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.ckpt");
    let progress = Progress {
        episodes_done: 1,
        total_steps: 60,
    };
    save_agent(&path, t.agent(), progress).unwrap();
    let (back, p) = load_agent(&path).unwrap();
    assert_eq!(&back, t.agent());
    assert_eq!(p, progress);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_agent(&path).is_err());
}

#[test]
fn resume_refuses_a_different_observation_width() {
    let dir = tempfile::tempdir().unwrap();
    let t = Trainer::new(short_env(), tiny(1, 10)).unwrap();
    t.save_checkpoint(dir.path()).unwrap();
    let err = Trainer::resume(short_env().with_tactile(true), tiny(1, 10), dir.path()).unwrap_err();
    assert!(err.to_string().contains("observation width"), "{err}");
}
