//! Run orchestration: configuration files, training with checkpoints and
//! resume, evaluation, matched-seed comparison and trace export. Every
//! command writes its outputs and a manifest into one directory.

mod config;
mod manifest;
mod runs;

pub use config::{parse_switch, Overrides, RunConfig, RunSection};
pub use manifest::{summary_table, unix_now, RunManifest, MANIFEST_FILE, VERSION_TAG};
pub use runs::{
    checkpoint_dir_for, eval_reset_seed, evaluate, latest_checkpoint, load_policy, read_metrics, run_compare, run_eval,
    run_replay_export, run_train, ArmSummary, CompareReport, EvalEpisode, EvalSummary, ExportSummary, TrainSummary,
    COMPARE_EPISODES_FILE, COMPARE_FILE, CONFIG_FILE, EVAL_FILE, METRICS_FILE, SERIES_FILE, STREAK_FILE,
};
