//! Per-timestep episode traces as CSV.
//!
//! Columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `step` | 0-based control step |
//! | `raw_a0..raw_a5` | action as emitted by the policy |
//! | `a0..a5` | action after noise and clipping |
//! | `r_dist, r_align, r_surr, r_contact` | reward terms |
//! | `reward` | their sum |
//! | `contact_force` | total normal contact force this step, N |
//! | `gripper_x..gripper_z, gripper_qw..gripper_qz` | gripper pose |
//! | `target_x..target_z, target_qw..target_qz` | true target pose |
//! | `in_longest_streak` | 1 for steps in the episode's longest above-threshold run |

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::reward::longest_streak;
use super::{StepResult, WorldState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub step: usize,
    pub raw_a0: f64,
    pub raw_a1: f64,
    pub raw_a2: f64,
    pub raw_a3: f64,
    pub raw_a4: f64,
    pub raw_a5: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub r_dist: f64,
    pub r_align: f64,
    pub r_surr: f64,
    pub r_contact: f64,
    pub reward: f64,
    pub contact_force: f64,
    pub gripper_x: f64,
    pub gripper_y: f64,
    pub gripper_z: f64,
    pub gripper_qw: f64,
    pub gripper_qx: f64,
    pub gripper_qy: f64,
    pub gripper_qz: f64,
    pub target_x: f64,
    pub target_y: f64,
    pub target_z: f64,
    pub target_qw: f64,
    pub target_qx: f64,
    pub target_qy: f64,
    pub target_qz: f64,
    pub in_longest_streak: u8,
}

impl TraceRecord {
    /// Record for step `step`, taken right after `env.step` returned `result`.
    pub fn new(step: usize, raw_action: &[f64; 6], result: &StepResult, world: &WorldState) -> Self {
        let a = result.info.applied_action;
        let g = world.gripper.pose;
        let t = world.target.pose;
        TraceRecord {
            step,
            raw_a0: raw_action[0],
            raw_a1: raw_action[1],
            raw_a2: raw_action[2],
            raw_a3: raw_action[3],
            raw_a4: raw_action[4],
            raw_a5: raw_action[5],
            a0: a[0],
            a1: a[1],
            a2: a[2],
            a3: a[3],
            a4: a[4],
            a5: a[5],
            r_dist: result.terms.r_dist,
            r_align: result.terms.r_align,
            r_surr: result.terms.r_surr,
            r_contact: result.terms.r_contact,
            reward: result.reward,
            contact_force: result.info.contact_force,
            gripper_x: g.position.x,
            gripper_y: g.position.y,
            gripper_z: g.position.z,
            gripper_qw: g.orientation.w,
            gripper_qx: g.orientation.x,
            gripper_qy: g.orientation.y,
            gripper_qz: g.orientation.z,
            target_x: t.position.x,
            target_y: t.position.y,
            target_z: t.position.z,
            target_qw: t.orientation.w,
            target_qx: t.orientation.x,
            target_qy: t.orientation.y,
            target_qz: t.orientation.z,
            in_longest_streak: 0,
        }
    }
}

/// Recomputes the `in_longest_streak` flags; returns `(start, len)` of the streak.
pub fn mark_longest_streak(records: &mut [TraceRecord], threshold: f64) -> (usize, usize) {
    let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
    let (start, len) = longest_streak(&rewards, threshold);
    for (i, r) in records.iter_mut().enumerate() {
        r.in_longest_streak = u8::from(len > 0 && (start..start + len).contains(&i));
    }
    (start, len)
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_to(file, records).map_err(|e| csv_error(path, e))
}

pub fn write_trace_to<W: Write>(w: W, records: &[TraceRecord]) -> std::result::Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(TRACE_HEADER)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a trace; errors carry the 1-based line number of the bad record.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: "unexpected header row".into(),
        });
    }
    rdr.deserialize().map(|r| r.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
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

pub const TRACE_HEADER: [&str; 34] = [
    "step",
    "raw_a0",
    "raw_a1",
    "raw_a2",
    "raw_a3",
    "raw_a4",
    "raw_a5",
    "a0",
    "a1",
    "a2",
    "a3",
    "a4",
    "a5",
    "r_dist",
    "r_align",
    "r_surr",
    "r_contact",
    "reward",
    "contact_force",
    "gripper_x",
    "gripper_y",
    "gripper_z",
    "gripper_qw",
    "gripper_qx",
    "gripper_qy",
    "gripper_qz",
    "target_x",
    "target_y",
    "target_z",
    "target_qw",
    "target_qx",
    "target_qy",
    "target_qz",
    "in_longest_streak",
];
