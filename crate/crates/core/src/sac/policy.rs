use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::neural::{
    backward, forward, init_params, predict, DenseParams, ForwardCache, Gradients, Matrix, OutputActivation,
};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_7;

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `log(1 - tanh(u)^2)` without cancellation for large `|u|`.
pub fn log_tanh_jacobian(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Log-density of `a = tanh(mean + std·noise)` given the noise draw.
pub fn squashed_log_prob(mean: &[f64], log_std: &[f64], noise: &[f64]) -> f64 {
    let mut lp = 0.0;
    for i in 0..mean.len() {
        let ls = log_std[i].clamp(LOG_STD_MIN, LOG_STD_MAX);
        let u = mean[i] + ls.exp() * noise[i];
        lp += -0.5 * noise[i] * noise[i] - ls - HALF_LOG_2PI - log_tanh_jacobian(u);
    }
    lp
}

/// `rows × cols` independent standard normal draws, filled row by row.
pub fn standard_normal(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = rng.sample(StandardNormal);
    }
    m
}

/// Squashed-Gaussian policy: an MLP emitting a mean and a log-std per action
/// dimension, followed by `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub params: DenseParams,
    action_dim: usize,
}

/// A batch of reparameterised samples plus what the backward pass needs.
#[derive(Debug, Clone)]
pub struct PolicySample {
    pub actions: Matrix,
    pub log_probs: Vec<f64>,
    cache: ForwardCache,
    noise: Matrix,
    log_std: Matrix,
    clamped: Vec<bool>,
}

impl PolicyNet {
    pub fn new(seed: u64, obs_dim: usize, hidden: &[usize], action_dim: usize) -> Result<Self> {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * action_dim);
        Self::from_params(init_params(seed, &sizes)?, action_dim)
    }

    pub fn from_params(params: DenseParams, action_dim: usize) -> Result<Self> {
        if action_dim == 0 || params.output_dim() != 2 * action_dim {
            return Err(Error::contract(format!(
                "policy output width {} does not fit action dimension {action_dim}",
                params.output_dim()
            )));
        }
        Ok(PolicyNet { params, action_dim })
    }

    pub fn obs_dim(&self) -> usize {
        self.params.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn check_obs(&self, width: usize) -> Result<()> {
        if width != self.obs_dim() {
            return Err(Error::contract(format!(
                "observation width {width} does not match policy input {}",
                self.obs_dim()
            )));
        }
        Ok(())
    }

    /// Means and clamped log-stds for a batch of observations.
    pub fn distribution(&self, obs: &Matrix) -> Result<(Matrix, Matrix)> {
        self.check_obs(obs.cols())?;
        let out = predict(&self.params, obs, OutputActivation::Linear)?;
        let a = self.action_dim;
        let mean = out.columns(0, a);
        let mut log_std = out.columns(a, 2 * a);
        for v in log_std.as_mut_slice() {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
        Ok((mean, log_std))
    }

    /// `tanh(mean)`, the action used for evaluation.
    pub fn deterministic_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let (mean, _) = self.distribution(&Matrix::from_vec(1, obs.len(), obs.to_vec())?)?;
        Ok(mean.row(0).iter().map(|m| m.tanh()).collect())
    }

    /// One stochastic action and its log-density.
    pub fn sample_action(&self, obs: &[f64], rng: &mut impl Rng) -> Result<(Vec<f64>, f64)> {
        let s = self.sample(&Matrix::from_vec(1, obs.len(), obs.to_vec())?, rng)?;
        Ok((s.actions.row(0).to_vec(), s.log_probs[0]))
    }

    /// Samples one action per row, drawing noise row by row.
    pub fn sample(&self, obs: &Matrix, rng: &mut impl Rng) -> Result<PolicySample> {
        self.check_obs(obs.cols())?;
        self.sample_with_noise(obs, standard_normal(obs.rows(), self.action_dim, rng))
    }

    /// Deterministic core of [`PolicyNet::sample`] for a given noise matrix.
    pub fn sample_with_noise(&self, obs: &Matrix, noise: Matrix) -> Result<PolicySample> {
        self.check_obs(obs.cols())?;
        let (n, a) = (obs.rows(), self.action_dim);
        if noise.rows() != n || noise.cols() != a {
            return Err(Error::contract("noise shape does not match the batch"));
        }
        let (out, cache) = forward(&self.params, obs, OutputActivation::Linear)?;
        let mut actions = Matrix::zeros(n, a);
        let mut log_std = Matrix::zeros(n, a);
        let mut clamped = vec![false; n * a];
        let mut log_probs = vec![0.0; n];
        for b in 0..n {
            let row = out.row(b);
            let mut lp = 0.0;
            for i in 0..a {
                let raw = row[a + i];
                let ls = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
                clamped[b * a + i] = ls != raw;
                let e = noise.get(b, i);
                let u = row[i] + ls.exp() * e;
                actions.set(b, i, u.tanh());
                log_std.set(b, i, ls);
                lp += -0.5 * e * e - ls - HALF_LOG_2PI - log_tanh_jacobian(u);
            }
            log_probs[b] = lp;
        }
        Ok(PolicySample {
            actions,
            log_probs,
            cache,
            noise,
            log_std,
            clamped,
        })
    }

    /// Parameter gradients of `Σ_b (g_a[b]·a[b] + g_lp[b]·log π[b])` through
    /// the reparameterised sample. Clamped log-std entries get no gradient.
    pub fn backward_sample(
        &self,
        s: &PolicySample,
        grad_actions: &Matrix,
        grad_log_probs: &[f64],
    ) -> Result<Gradients> {
        let (n, a) = (s.actions.rows(), self.action_dim);
        if grad_actions.rows() != n || grad_actions.cols() != a || grad_log_probs.len() != n {
            return Err(Error::contract("policy gradient shapes do not match the sample"));
        }
        let mut g_out = Matrix::zeros(n, 2 * a);
        for (b, &glp) in grad_log_probs.iter().enumerate() {
            for i in 0..a {
                let act = s.actions.get(b, i);
                // d tanh(u)/du = 1 - a², d(-log(1 - a²))/du = 2a.
                let gu = grad_actions.get(b, i) * (1.0 - act * act) + glp * 2.0 * act;
                g_out.set(b, i, gu);
                if !s.clamped[b * a + i] {
                    let sigma = s.log_std.get(b, i).exp();
                    g_out.set(b, a + i, gu * sigma * s.noise.get(b, i) - glp);
                }
            }
        }
        backward(&self.params, &s.cache, &g_out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softplus_matches_naive_form() {
        for x in [-30.0, -2.0, 0.0, 0.5, 3.0, 30.0] {
            let naive = (1.0 + f64::exp(x)).ln();
            assert!((softplus(x) - naive).abs() < 1e-12);
        }
        assert_eq!(softplus(800.0), 800.0);
    }

    #[test]
    fn jacobian_matches_direct_form() {
        for u in [-3.0, -0.7, 0.0, 0.2, 1.5, 4.0] {
            let direct = (1.0 - f64::tanh(u).powi(2)).ln();
            assert!((log_tanh_jacobian(u) - direct).abs() < 1e-10);
        }
        assert!(log_tanh_jacobian(40.0).is_finite());
    }

    #[test]
    fn tiny_std_gives_tanh_mean() {
        let mut p = PolicyNet::new(0, 3, &[8], 2).unwrap();
        // Force log-std to the floor through the output bias.
        let last = p.params.layers.last_mut().unwrap();
        for i in 2..4 {
            last.bias[i] = -1e3;
            for w in &mut last.weight[i * 8..(i + 1) * 8] {
                *w = 0.0;
            }
        }
        let obs = [0.3, -0.2, 0.9];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, _) = p.sample_action(&obs, &mut rng).unwrap();
        let det = p.deterministic_action(&obs).unwrap();
        for (x, y) in a.iter().zip(&det) {
            assert!((x - y).abs() < 1e-7);
        }
    }

    #[test]
    fn actions_stay_inside_the_box() {
        let p = PolicyNet::new(0, 4, &[16, 16], 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let obs = Matrix::from_vec(64, 4, (0..256).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let s = p.sample(&obs, &mut rng).unwrap();
        assert!(s.actions.as_slice().iter().all(|a| a.abs() <= 1.0));
        assert!(s.log_probs.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn log_prob_matches_reference_form() {
        let p = PolicyNet::new(4, 3, &[8], 2).unwrap();
        let obs = Matrix::from_rows(&[&[0.1, 0.2, -0.3]]).unwrap();
        let noise = Matrix::from_rows(&[&[0.4, -1.1]]).unwrap();
        let s = p.sample_with_noise(&obs, noise).unwrap();
        let (mean, log_std) = p.distribution(&obs).unwrap();
        // Normal density of u, then change of variables through tanh.
        let mut expect = 0.0;
        for i in 0..2 {
            let sigma = log_std.get(0, i).exp();
            let u = mean.get(0, i) + sigma * [0.4, -1.1][i];
            let z = (u - mean.get(0, i)) / sigma;
            let normal = (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            expect += (normal / (1.0 - u.tanh().powi(2))).ln();
        }
        assert!((s.log_probs[0] - expect).abs() < 1e-10);
    }

    #[test]
    fn width_mismatch_is_refused() {
        let p = PolicyNet::new(0, 39, &[8], 6).unwrap();
        assert!(p.deterministic_action(&[0.0; 40]).is_err());
        assert!(PolicyNet::from_params(p.params.clone(), 5).is_err());
    }
}
