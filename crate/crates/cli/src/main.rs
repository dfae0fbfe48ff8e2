use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use softcap::harness::{
    latest_checkpoint, parse_switch, run_compare, run_eval, run_replay_export, run_train, Overrides, RunConfig,
};

/// Soft-capture gripper training with Soft Actor-Critic.
#[derive(Parser)]
#[command(name = "softcap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent, writing metrics, checkpoints and a manifest.
    Train {
        #[command(flatten)]
        common: Common,
        /// Episodes to train for (overrides train.episodes).
        #[arg(long)]
        episodes: Option<usize>,
        /// Resume from this checkpoint directory or agent file.
        #[arg(long, conflicts_with = "resume")]
        checkpoint: Option<PathBuf>,
        /// Resume from the newest checkpoint already in --out.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a checkpoint with the deterministic policy.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Evaluation episodes (overrides run.eval_episodes).
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Evaluate two arms under matched seeds; arms without a checkpoint are trained first.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Training episodes for arms that need training.
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        eval_episodes: Option<usize>,
        /// Checkpoint for arm A.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Config for arm B; defaults to arm A's config with the tactile flag flipped.
        #[arg(long)]
        config_b: Option<PathBuf>,
        /// Checkpoint for arm B.
        #[arg(long)]
        checkpoint_b: Option<PathBuf>,
    },
    /// Re-emit a trace as plot-ready series with the longest success streak flagged.
    ReplayExport {
        #[command(flatten)]
        common: Common,
        trace: PathBuf,
    },
    /// Print the resolved configuration as TOML.
    PrintConfig {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML file with [run], [env] and [train] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tactile observation channel: on or off.
    #[arg(long, value_parser = ["on", "off"])]
    tactile: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "runs/latest")]
    out: PathBuf,
}

impl Common {
    fn resolve(&self, episodes: Option<usize>, eval_episodes: Option<usize>) -> Result<RunConfig> {
        self.resolve_file(self.config.as_deref(), episodes, eval_episodes)
    }

    fn resolve_file(
        &self,
        file: Option<&Path>,
        episodes: Option<usize>,
        eval_episodes: Option<usize>,
    ) -> Result<RunConfig> {
        let tactile = self.tactile.as_deref().map(parse_switch).transpose()?;
        let cfg = RunConfig::load(file)?.with_overrides(Overrides {
            seed: self.seed,
            tactile,
            episodes,
            eval_episodes,
        })?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            common,
            episodes,
            checkpoint,
            resume,
        } => {
            let cfg = common.resolve(episodes, None)?;
            let from = if resume {
                let latest = latest_checkpoint(&common.out)?;
                Some(latest.with_context(|| format!("no checkpoint found under {}", common.out.display()))?)
            } else {
                checkpoint
            };
            let s = run_train(&cfg, &common.out, from.as_deref())?;
            println!(
                "trained {} episodes; success rate {}; final checkpoint {}",
                s.episodes,
                fmt_rate(s.success_rate),
                s.final_checkpoint.display()
            );
        }
        Command::Eval {
            common,
            episodes,
            checkpoint,
        } => {
            let cfg = common.resolve(None, episodes)?;
            let s = run_eval(&cfg, &checkpoint, &common.out)?;
            println!(
                "{} episodes, {} successes, success rate {}, mean return {}",
                s.episodes,
                s.successes,
                fmt_rate(s.success_rate),
                fmt_opt(s.mean_return)
            );
        }
        Command::Compare {
            common,
            episodes,
            eval_episodes,
            checkpoint,
            config_b,
            checkpoint_b,
        } => {
            let a = common.resolve(episodes, eval_episodes)?;
            let b = match &config_b {
                Some(p) => common.resolve_file(Some(p), episodes, eval_episodes)?,
                None => {
                    let mut b = a.clone();
                    b.env.tactile_enabled = !a.env.tactile_enabled;
                    b
                }
            };
            let r = run_compare(&a, checkpoint.as_deref(), &b, checkpoint_b.as_deref(), &common.out)?;
            println!("arm  tactile  episodes  success_rate  mean_return");
            for arm in [&r.a, &r.b] {
                println!(
                    "{:<4} {:<8} {:<9} {:<13} {}",
                    arm.arm,
                    if arm.tactile == 1 { "on" } else { "off" },
                    arm.episodes,
                    fmt_rate(arm.success_rate),
                    fmt_opt(arm.mean_return)
                );
            }
        }
        Command::ReplayExport { common, trace } => {
            let cfg = common.resolve(None, None)?;
            let s = run_replay_export(&cfg, &trace, &common.out)?;
            println!(
                "{} steps; longest streak {} from step {}; success {}",
                s.steps, s.streak_length, s.streak_start, s.success
            );
        }
        Command::PrintConfig { common } => {
            print!("{}", common.resolve(None, None)?.to_toml());
        }
    }
    Ok(())
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".into(), |r| format!("{r:.3}"))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |x| format!("{x:.2}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
