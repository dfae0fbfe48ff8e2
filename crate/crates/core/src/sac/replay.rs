//! Fixed-capacity ring buffer of transitions with uniform sampling.
//!
//! Binary layout of a saved buffer (little-endian):
//!
//! ```text
//! "SCRB" | version u32 = 1 | capacity u64 | obs_dim u32 | action_dim u32
//!        | len u64 | cursor u64 | len records in slot order
//! record = obs f64×obs_dim | action f64×action_dim | reward f64
//!        | next_obs f64×obs_dim | done f64
//! ```

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::neural::checkpoint::{put_f64, put_f64s, put_u32, put_u64, ByteReader};
use crate::neural::Matrix;

const MAGIC: [u8; 4] = *b"SCRB";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// A sampled minibatch, one transition per row.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Matrix,
    pub actions: Matrix,
    pub rewards: Vec<f64>,
    pub next_obs: Matrix,
    pub dones: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(ts: &[Transition]) -> Result<Self> {
        let od = ts.first().map_or(0, |t| t.obs.len());
        let ad = ts.first().map_or(0, |t| t.action.len());
        let mut b = Batch {
            obs: Matrix::zeros(ts.len(), od),
            actions: Matrix::zeros(ts.len(), ad),
            rewards: Vec::with_capacity(ts.len()),
            next_obs: Matrix::zeros(ts.len(), od),
            dones: Vec::with_capacity(ts.len()),
        };
        for (i, t) in ts.iter().enumerate() {
            if t.obs.len() != od || t.next_obs.len() != od || t.action.len() != ad {
                return Err(Error::contract("transitions have mixed widths"));
            }
            b.obs.row_mut(i).copy_from_slice(&t.obs);
            b.actions.row_mut(i).copy_from_slice(&t.action);
            b.next_obs.row_mut(i).copy_from_slice(&t.next_obs);
            b.rewards.push(t.reward);
            b.dones.push(if t.done { 1.0 } else { 0.0 });
        }
        Ok(b)
    }
}

/// Storage grows on demand up to `capacity`, then the oldest slot is overwritten.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    action_dim: usize,
    obs: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_obs: Vec<f64>,
    dones: Vec<f64>,
    cursor: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be >= 1"));
        }
        Ok(ReplayBuffer {
            capacity,
            obs_dim,
            action_dim,
            obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_obs: Vec::new(),
            dones: Vec::new(),
            cursor: 0,
            len: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn push(&mut self, obs: &[f64], action: &[f64], reward: f64, next_obs: &[f64], done: bool) -> Result<()> {
        if obs.len() != self.obs_dim || next_obs.len() != self.obs_dim || action.len() != self.action_dim {
            return Err(Error::contract("transition width does not match the buffer"));
        }
        let done = if done { 1.0 } else { 0.0 };
        if self.len < self.capacity {
            self.obs.extend_from_slice(obs);
            self.actions.extend_from_slice(action);
            self.rewards.push(reward);
            self.next_obs.extend_from_slice(next_obs);
            self.dones.push(done);
            self.len += 1;
        } else {
            let (i, od, ad) = (self.cursor, self.obs_dim, self.action_dim);
            self.obs[i * od..(i + 1) * od].copy_from_slice(obs);
            self.actions[i * ad..(i + 1) * ad].copy_from_slice(action);
            self.rewards[i] = reward;
            self.next_obs[i * od..(i + 1) * od].copy_from_slice(next_obs);
            self.dones[i] = done;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    pub fn push_transition(&mut self, t: &Transition) -> Result<()> {
        self.push(&t.obs, &t.action, t.reward, &t.next_obs, t.done)
    }

    fn slot(&self, i: usize) -> Transition {
        let (od, ad) = (self.obs_dim, self.action_dim);
        Transition {
            obs: self.obs[i * od..(i + 1) * od].to_vec(),
            action: self.actions[i * ad..(i + 1) * ad].to_vec(),
            reward: self.rewards[i],
            next_obs: self.next_obs[i * od..(i + 1) * od].to_vec(),
            done: self.dones[i] != 0.0,
        }
    }

    /// The `k`-th stored transition counting from the oldest.
    pub fn get(&self, k: usize) -> Option<Transition> {
        if k >= self.len {
            return None;
        }
        let oldest = if self.len < self.capacity { 0 } else { self.cursor };
        Some(self.slot((oldest + k) % self.capacity))
    }

    /// Slot indices drawn uniformly with replacement.
    pub fn sample_indices(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::contract("sampling from an empty replay buffer"));
        }
        Ok((0..n).map(|_| rng.random_range(0..self.len)).collect())
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Batch> {
        let idx = self.sample_indices(n, rng)?;
        let (od, ad) = (self.obs_dim, self.action_dim);
        let mut b = Batch {
            obs: Matrix::zeros(n, od),
            actions: Matrix::zeros(n, ad),
            rewards: Vec::with_capacity(n),
            next_obs: Matrix::zeros(n, od),
            dones: Vec::with_capacity(n),
        };
        for (r, &i) in idx.iter().enumerate() {
            b.obs.row_mut(r).copy_from_slice(&self.obs[i * od..(i + 1) * od]);
            b.actions
                .row_mut(r)
                .copy_from_slice(&self.actions[i * ad..(i + 1) * ad]);
            b.next_obs
                .row_mut(r)
                .copy_from_slice(&self.next_obs[i * od..(i + 1) * od]);
            b.rewards.push(self.rewards[i]);
            b.dones.push(self.dones[i]);
        }
        Ok(b)
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.extend_from_slice(&MAGIC);
        put_u32(buf, VERSION);
        put_u64(buf, self.capacity as u64);
        put_u32(buf, self.obs_dim as u32);
        put_u32(buf, self.action_dim as u32);
        put_u64(buf, self.len as u64);
        put_u64(buf, self.cursor as u64);
        let (od, ad) = (self.obs_dim, self.action_dim);
        for i in 0..self.len {
            put_f64s(buf, &self.obs[i * od..(i + 1) * od]);
            put_f64s(buf, &self.actions[i * ad..(i + 1) * ad]);
            put_f64(buf, self.rewards[i]);
            put_f64s(buf, &self.next_obs[i * od..(i + 1) * od]);
            put_f64(buf, self.dones[i]);
        }
    }

    pub fn decode(r: &mut ByteReader<'_>) -> std::result::Result<Self, String> {
        r.expect_magic(&MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(format!("unsupported replay format version {version}"));
        }
        let capacity = r.u64()? as usize;
        let obs_dim = r.u32()? as usize;
        let action_dim = r.u32()? as usize;
        let len = r.u64()? as usize;
        let cursor = r.u64()? as usize;
        if capacity == 0 || len > capacity || cursor >= capacity {
            return Err(format!(
                "inconsistent header: capacity {capacity}, len {len}, cursor {cursor}"
            ));
        }
        let record = 8 * (2 * obs_dim + action_dim + 2);
        if r.remaining() < len.saturating_mul(record) {
            return Err("truncated replay records".into());
        }
        let mut b = ReplayBuffer::new(capacity, obs_dim, action_dim).map_err(|e| e.to_string())?;
        for _ in 0..len {
            b.obs.extend(r.f64_vec(obs_dim)?);
            b.actions.extend(r.f64_vec(action_dim)?);
            b.rewards.push(r.f64()?);
            b.next_obs.extend(r.f64_vec(obs_dim)?);
            b.dones.push(r.f64()?);
        }
        b.len = len;
        b.cursor = cursor;
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.encode(&mut buf);
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut r = ByteReader::new(&data);
        let corrupt = |reason| Error::Checkpoint {
            path: path.to_path_buf(),
            reason,
        };
        let b = Self::decode(&mut r).map_err(corrupt)?;
        if r.remaining() != 0 {
            return Err(corrupt(format!("{} trailing bytes", r.remaining())));
        }
        Ok(b)
    }
}
