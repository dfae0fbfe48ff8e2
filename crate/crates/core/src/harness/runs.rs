use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::manifest::{summary_table, unix_now, RunManifest, VERSION_TAG};
use crate::env::trace::{mark_longest_streak, read_trace, write_trace, TraceRecord};
use crate::env::{longest_streak, EnvConfig, SoftCaptureEnv, ACTION_DIM};
use crate::error::{Error, Result};
use crate::sac::{episode_streams, load_agent, EpisodeMetrics, PolicyNet, Trainer, AGENT_FILE};

pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.csv";
pub const EVAL_FILE: &str = "eval_episodes.csv";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_EPISODES_FILE: &str = "compare_episodes.csv";
pub const SERIES_FILE: &str = "series.csv";
pub const STREAK_FILE: &str = "streak.toml";

const CHECKPOINTS_DIR: &str = "checkpoints";
const TRACES_DIR: &str = "traces";
const EVAL_SEED_SALT: u64 = 0x5eed_e7a1_0000_0001;

const METRICS_HEADER: [&str; 14] = [
    "episode",
    "total_steps",
    "episode_return",
    "r_dist",
    "r_align",
    "r_surr",
    "r_contact",
    "success",
    "longest_streak",
    "updates",
    "critic_loss",
    "policy_loss",
    "entropy",
    "alpha",
];

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: format!("{kind:?}"),
        },
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs `body`, then records a manifest in `out` whatever the outcome.
fn with_manifest<T: Serialize>(
    command: &str,
    cfg: &RunConfig,
    config_b: Option<&RunConfig>,
    out: &Path,
    body: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let started = unix_now();
    let setup = ensure_dir(out).and_then(|()| {
        let path = out.join(CONFIG_FILE);
        fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(path, e))
    });
    let result = setup.and_then(|()| body());
    let manifest = RunManifest {
        command: command.into(),
        version: VERSION_TAG.into(),
        seed: cfg.train.seed,
        started_unix: started,
        finished_unix: unix_now(),
        status: if result.is_ok() { "ok" } else { "failed" }.into(),
        error: result.as_ref().err().map(|e| e.to_string()),
        summary: result.as_ref().map(summary_table).unwrap_or_default(),
        config: cfg.clone(),
        config_b: config_b.cloned(),
    };
    match (result, manifest.write(out)) {
        (Ok(v), Ok(())) => Ok(v),
        (Ok(_), Err(e)) => Err(e),
        (Err(e), _) => Err(e),
    }
}

// ---------------------------------------------------------------- training

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub episodes: usize,
    pub successes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_return: Option<f64>,
    pub final_checkpoint: PathBuf,
}

/// Directory of the checkpoint taken after `episodes` episodes.
pub fn checkpoint_dir_for(out: &Path, episodes: usize) -> PathBuf {
    out.join(CHECKPOINTS_DIR).join(format!("ep_{episodes:06}"))
}

/// Most recent checkpoint directory under a training output directory.
pub fn latest_checkpoint(out: &Path) -> Result<Option<PathBuf>> {
    let dir = out.join(CHECKPOINTS_DIR);
    if !dir.exists() {
        return Ok(None);
    }
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        let n = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("ep_"))
            .and_then(|n| n.parse::<usize>().ok());
        if let Some(n) = n {
            if path.join(AGENT_FILE).exists() && best.as_ref().is_none_or(|b| n > b.0) {
                best = Some((n, path));
            }
        }
    }
    Ok(best.map(|b| b.1))
}

fn checkpoint_dir(path: &Path) -> PathBuf {
    if path.is_file() {
        path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    } else {
        path.to_path_buf()
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpisodeMetrics>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Keeps the header and the first `rows` records of a metrics file.
fn truncate_metrics(path: &Path, rows: usize) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut kept = String::new();
    let mut count = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if count > rows {
            break;
        }
        kept.push_str(&line);
        kept.push('\n');
        count += 1;
    }
    if count < rows + 1 {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            reason: format!(
                "metrics file has {} rows but the checkpoint is at episode {rows}",
                count.saturating_sub(1)
            ),
        });
    }
    fs::write(path, kept).map_err(|e| Error::io(path, e))
}

/// Trains for `cfg.train.episodes` episodes, writing `metrics.csv`, periodic
/// checkpoints and a manifest into `out`. With `resume`, training continues
/// from that checkpoint and the metrics file is cut back to match it.
pub fn run_train(cfg: &RunConfig, out: &Path, resume: Option<&Path>) -> Result<TrainSummary> {
    with_manifest("train", cfg, None, out, || train_inner(cfg, out, resume))
}

fn train_inner(cfg: &RunConfig, out: &Path, resume: Option<&Path>) -> Result<TrainSummary> {
    let metrics_path = out.join(METRICS_FILE);
    let mut trainer = match resume {
        Some(p) => {
            let t = Trainer::resume(cfg.env, cfg.train.clone(), &checkpoint_dir(p))?;
            if metrics_path.exists() {
                truncate_metrics(&metrics_path, t.progress().episodes_done)?;
            } else {
                write_csv::<EpisodeMetrics>(&metrics_path, &METRICS_HEADER, &[])?;
            }
            log::info!("resuming at episode {}", t.progress().episodes_done + 1);
            t
        }
        None => {
            write_csv::<EpisodeMetrics>(&metrics_path, &METRICS_HEADER, &[])?;
            Trainer::new(cfg.env, cfg.train.clone())?
        }
    };

    let file = OpenOptions::new()
        .append(true)
        .open(&metrics_path)
        .map_err(|e| Error::io(&metrics_path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let every = cfg.run.checkpoint_every;
    let mut last_saved = None;
    while !trainer.is_finished() {
        let m = trainer.run_episode()?;
        w.serialize(&m).map_err(|e| csv_err(&metrics_path, e))?;
        w.flush().map_err(|e| Error::io(&metrics_path, e))?;
        log::debug!("episode {} return {:.2}", m.episode, m.episode_return);
        if every > 0 && m.episode % every == 0 {
            let dir = checkpoint_dir_for(out, m.episode);
            trainer.save_checkpoint(&dir)?;
            log::info!("checkpoint {}", dir.display());
            last_saved = Some(m.episode);
        }
    }
    let done = trainer.progress().episodes_done;
    let final_checkpoint = checkpoint_dir_for(out, done);
    if last_saved != Some(done) {
        trainer.save_checkpoint(&final_checkpoint)?;
    }

    let rows = read_metrics(&metrics_path)?;
    let successes = rows.iter().filter(|m| m.success == 1).count();
    Ok(TrainSummary {
        episodes: rows.len(),
        successes,
        success_rate: (!rows.is_empty()).then(|| successes as f64 / rows.len() as f64),
        mean_return: mean(rows.iter().map(|m| m.episode_return)),
        final_checkpoint,
    })
}

// -------------------------------------------------------------- evaluation

/// Outcome of one deterministic evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEpisode {
    pub episode: usize,
    pub episode_return: f64,
    pub r_dist: f64,
    pub r_align: f64,
    pub r_surr: f64,
    pub r_contact: f64,
    pub success: u8,
    pub longest_streak: usize,
}

const EVAL_HEADER: [&str; 8] = [
    "episode",
    "episode_return",
    "r_dist",
    "r_align",
    "r_surr",
    "r_contact",
    "success",
    "longest_streak",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub successes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_return: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_r_dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_r_align: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_r_surr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_r_contact: Option<f64>,
}

impl EvalSummary {
    pub fn from_episodes(eps: &[EvalEpisode]) -> Self {
        let successes = eps.iter().filter(|e| e.success == 1).count();
        EvalSummary {
            episodes: eps.len(),
            successes,
            success_rate: (!eps.is_empty()).then(|| successes as f64 / eps.len() as f64),
            mean_return: mean(eps.iter().map(|e| e.episode_return)),
            mean_r_dist: mean(eps.iter().map(|e| e.r_dist)),
            mean_r_align: mean(eps.iter().map(|e| e.r_align)),
            mean_r_surr: mean(eps.iter().map(|e| e.r_surr)),
            mean_r_contact: mean(eps.iter().map(|e| e.r_contact)),
        }
    }
}

/// Environment reset seed for evaluation episode `i`; kept apart from the
/// training streams of the same seed.
pub fn eval_reset_seed(seed: u64, i: usize) -> u64 {
    episode_streams(seed ^ EVAL_SEED_SALT, i).0
}

/// Loads the policy from an agent checkpoint file or a checkpoint directory.
pub fn load_policy(path: &Path) -> Result<PolicyNet> {
    let file = if path.is_dir() {
        path.join(AGENT_FILE)
    } else {
        path.to_path_buf()
    };
    Ok(load_agent(&file)?.0.policy)
}

fn check_width(policy: &PolicyNet, env: &EnvConfig, origin: &Path) -> Result<()> {
    let expected = env.obs_dim();
    if policy.obs_dim() != expected {
        return Err(Error::Config(format!(
            "checkpoint {} was trained on {}-dim observations, but tactile {} gives {expected}; \
             the 40th entry exists only with the tactile channel",
            origin.display(),
            policy.obs_dim(),
            if env.tactile_enabled { "on" } else { "off" }
        )));
    }
    if policy.action_dim() != ACTION_DIM {
        return Err(Error::Config(format!(
            "checkpoint has {} action outputs, expected {ACTION_DIM}",
            policy.action_dim()
        )));
    }
    Ok(())
}

/// Plays `episodes` episodes with the deterministic action `tanh(mean)`.
/// Traces go to `trace_dir/episode_NNNN.csv` when a directory is given.
pub fn evaluate(
    env_config: EnvConfig,
    policy: &PolicyNet,
    seed: u64,
    episodes: usize,
    trace_dir: Option<&Path>,
) -> Result<Vec<EvalEpisode>> {
    if policy.obs_dim() != env_config.obs_dim() {
        return Err(Error::Config(format!(
            "policy takes {} observations, environment produces {}",
            policy.obs_dim(),
            env_config.obs_dim()
        )));
    }
    if let Some(d) = trace_dir {
        ensure_dir(d)?;
    }
    let mut env = SoftCaptureEnv::new(env_config)?;
    let mut out = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let mut obs = env.reset(eval_reset_seed(seed, i));
        let mut trace = Vec::new();
        let mut sums = [0.0; 4];
        while !env.is_done() {
            let a = policy.deterministic_action(obs.as_slice())?;
            let mut action = [0.0; ACTION_DIM];
            action.copy_from_slice(&a);
            let res = env.step(&action)?;
            sums[0] += res.terms.r_dist;
            sums[1] += res.terms.r_align;
            sums[2] += res.terms.r_surr;
            sums[3] += res.terms.r_contact;
            if trace_dir.is_some() {
                trace.push(TraceRecord::new(env.step_count() - 1, &action, &res, env.world()));
            }
            obs = res.obs;
        }
        let (_, streak) = longest_streak(env.episode_rewards(), env_config.success_reward_threshold);
        if let Some(d) = trace_dir {
            mark_longest_streak(&mut trace, env_config.success_reward_threshold);
            write_trace(&d.join(format!("episode_{i:04}.csv")), &trace)?;
        }
        out.push(EvalEpisode {
            episode: i + 1,
            episode_return: env.episode_rewards().iter().sum(),
            r_dist: sums[0],
            r_align: sums[1],
            r_surr: sums[2],
            r_contact: sums[3],
            success: u8::from(env.episode_success()),
            longest_streak: streak,
        });
    }
    Ok(out)
}

/// Evaluates a checkpoint for `cfg.run.eval_episodes` episodes.
pub fn run_eval(cfg: &RunConfig, checkpoint: &Path, out: &Path) -> Result<EvalSummary> {
    with_manifest("eval", cfg, None, out, || eval_into(cfg, checkpoint, out))
}

fn eval_into(cfg: &RunConfig, checkpoint: &Path, out: &Path) -> Result<EvalSummary> {
    let policy = load_policy(checkpoint)?;
    check_width(&policy, &cfg.env, checkpoint)?;
    let traces = cfg.run.write_traces.then(|| out.join(TRACES_DIR));
    let eps = evaluate(
        cfg.env,
        &policy,
        cfg.train.seed,
        cfg.run.eval_episodes,
        traces.as_deref(),
    )?;
    write_csv(&out.join(EVAL_FILE), &EVAL_HEADER, &eps)?;
    Ok(EvalSummary::from_episodes(&eps))
}

// -------------------------------------------------------------- comparison

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    pub tactile: u8,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: Option<f64>,
    pub mean_return: Option<f64>,
    pub mean_r_dist: Option<f64>,
    pub mean_r_align: Option<f64>,
    pub mean_r_surr: Option<f64>,
    pub mean_r_contact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub a: ArmSummary,
    pub b: ArmSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PairedEpisode {
    episode: usize,
    return_a: f64,
    return_b: f64,
    success_a: u8,
    success_b: u8,
}

const COMPARE_HEADER: [&str; 10] = [
    "arm",
    "tactile",
    "episodes",
    "successes",
    "success_rate",
    "mean_return",
    "mean_r_dist",
    "mean_r_align",
    "mean_r_surr",
    "mean_r_contact",
];

const PAIRED_HEADER: [&str; 5] = ["episode", "return_a", "return_b", "success_a", "success_b"];

/// Evaluates two arms under matched seeds. An arm without a checkpoint is
/// trained first (into `out/arm_<name>`). The configurations may differ only
/// in the tactile flag.
pub fn run_compare(
    a: &RunConfig,
    a_checkpoint: Option<&Path>,
    b: &RunConfig,
    b_checkpoint: Option<&Path>,
    out: &Path,
) -> Result<CompareReport> {
    with_manifest("compare", a, Some(b), out, || {
        if !a.matches_except_tactile(b) {
            return Err(Error::Config(
                "compare arms must share every setting except env.tactile_enabled".into(),
            ));
        }
        let arm = |name: &str, cfg: &RunConfig, ckpt: Option<&Path>| -> Result<(ArmSummary, Vec<EvalEpisode>)> {
            let dir = out.join(format!("arm_{name}"));
            let ckpt = match ckpt {
                Some(p) => p.to_path_buf(),
                None => run_train(cfg, &dir.join("train"), None)?.final_checkpoint,
            };
            let policy = load_policy(&ckpt)?;
            check_width(&policy, &cfg.env, &ckpt)?;
            let traces = cfg.run.write_traces.then(|| dir.join(TRACES_DIR));
            let eps = evaluate(
                cfg.env,
                &policy,
                cfg.train.seed,
                cfg.run.eval_episodes,
                traces.as_deref(),
            )?;
            ensure_dir(&dir)?;
            write_csv(&dir.join(EVAL_FILE), &EVAL_HEADER, &eps)?;
            let s = EvalSummary::from_episodes(&eps);
            Ok((
                ArmSummary {
                    arm: name.into(),
                    tactile: u8::from(cfg.env.tactile_enabled),
                    episodes: s.episodes,
                    successes: s.successes,
                    success_rate: s.success_rate,
                    mean_return: s.mean_return,
                    mean_r_dist: s.mean_r_dist,
                    mean_r_align: s.mean_r_align,
                    mean_r_surr: s.mean_r_surr,
                    mean_r_contact: s.mean_r_contact,
                },
                eps,
            ))
        };
        let (sa, ea) = arm("a", a, a_checkpoint)?;
        let (sb, eb) = arm("b", b, b_checkpoint)?;
        write_csv(&out.join(COMPARE_FILE), &COMPARE_HEADER, &[&sa, &sb])?;
        let paired: Vec<PairedEpisode> = ea
            .iter()
            .zip(&eb)
            .map(|(x, y)| PairedEpisode {
                episode: x.episode,
                return_a: x.episode_return,
                return_b: y.episode_return,
                success_a: x.success,
                success_b: y.success,
            })
            .collect();
        write_csv(&out.join(COMPARE_EPISODES_FILE), &PAIRED_HEADER, &paired)?;
        Ok(CompareReport { a: sa, b: sb })
    })
}

// ------------------------------------------------------------------ export

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportSummary {
    pub steps: usize,
    pub streak_start: usize,
    pub streak_length: usize,
    pub success: bool,
}

/// Re-emits a trace with freshly computed streak flags (`series.csv`) and
/// writes the streak location (`streak.toml`). Exporting an export
/// reproduces it byte for byte.
pub fn run_replay_export(cfg: &RunConfig, trace: &Path, out: &Path) -> Result<ExportSummary> {
    with_manifest("replay-export", cfg, None, out, || {
        let mut records = read_trace(trace)?;
        let series = out.join(SERIES_FILE);
        if records.is_empty() {
            log::warn!("trace {} has no records; writing empty output", trace.display());
            File::create(&series).map_err(|e| Error::io(&series, e))?;
        } else {
            mark_longest_streak(&mut records, cfg.env.success_reward_threshold);
            write_trace(&series, &records)?;
        }
        let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
        let (start, len) = longest_streak(&rewards, cfg.env.success_reward_threshold);
        let summary = ExportSummary {
            steps: records.len(),
            streak_start: start,
            streak_length: len,
            success: len >= cfg.env.success_streak_length,
        };
        let path = out.join(STREAK_FILE);
        let text = toml::to_string(&summary).map_err(|e| Error::config(e.to_string()))?;
        let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
        Ok(summary)
    })
}
