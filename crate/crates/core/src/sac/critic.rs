use crate::error::{Error, Result};
use crate::neural::{backward, forward, init_params, predict, DenseParams, Matrix, OutputActivation};

/// Two online Q-networks over `(s, a)` and their slowly tracking target copies.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinCritics {
    pub q1: DenseParams,
    pub q2: DenseParams,
    pub target1: DenseParams,
    pub target2: DenseParams,
}

fn q_sizes(obs_dim: usize, action_dim: usize, hidden: &[usize]) -> Vec<usize> {
    let mut sizes = vec![obs_dim + action_dim];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    sizes
}

/// Runs a critic on the concatenated `(obs, actions)` batch.
pub fn q_values(params: &DenseParams, obs: &Matrix, actions: &Matrix) -> Result<Vec<f64>> {
    Ok(predict(params, &Matrix::hstack(obs, actions)?, OutputActivation::Linear)?.into_vec())
}

impl TwinCritics {
    /// Independent initialisations for the two critics; targets start as exact copies.
    pub fn new(seed: u64, obs_dim: usize, action_dim: usize, hidden: &[usize]) -> Result<Self> {
        let sizes = q_sizes(obs_dim, action_dim, hidden);
        let q1 = init_params(seed, &sizes)?;
        let q2 = init_params(seed.wrapping_add(1), &sizes)?;
        Self::from_parts(q1.clone(), q2.clone(), q1, q2)
    }

    pub fn from_parts(q1: DenseParams, q2: DenseParams, target1: DenseParams, target2: DenseParams) -> Result<Self> {
        let ok = q1.output_dim() == 1 && q1.same_shape(&q2) && q1.same_shape(&target1) && q1.same_shape(&target2);
        if !ok {
            return Err(Error::contract("critic and target shapes differ"));
        }
        Ok(TwinCritics {
            q1,
            q2,
            target1,
            target2,
        })
    }

    /// Element-wise `min(Q̄₁, Q̄₂)` from the target copies.
    pub fn target_min(&self, obs: &Matrix, actions: &Matrix) -> Result<Vec<f64>> {
        let a = q_values(&self.target1, obs, actions)?;
        let b = q_values(&self.target2, obs, actions)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect())
    }

    /// Gradient of `Σ_b min(Q₁, Q₂)(s_b, a_b)` with respect to the actions,
    /// taking whichever critic is smaller per sample (the first on ties).
    pub fn min_q_action_grad(&self, obs: &Matrix, actions: &Matrix) -> Result<(Vec<f64>, Matrix)> {
        let input = Matrix::hstack(obs, actions)?;
        let (y1, c1) = forward(&self.q1, &input, OutputActivation::Linear)?;
        let (y2, c2) = forward(&self.q2, &input, OutputActivation::Linear)?;
        let n = input.rows();
        let (mut g1, mut g2) = (Matrix::zeros(n, 1), Matrix::zeros(n, 1));
        let mut min_q = Vec::with_capacity(n);
        for b in 0..n {
            let (a, c) = (y1.get(b, 0), y2.get(b, 0));
            if a <= c {
                g1.set(b, 0, 1.0);
                min_q.push(a);
            } else {
                g2.set(b, 0, 1.0);
                min_q.push(c);
            }
        }
        let d1 = backward(&self.q1, &c1, &g1)?.input;
        let d2 = backward(&self.q2, &c2, &g2)?.input;
        let od = obs.cols();
        let mut grad = Matrix::zeros(n, actions.cols());
        for b in 0..n {
            for (i, g) in grad.row_mut(b).iter_mut().enumerate() {
                *g = d1.get(b, od + i) + d2.get(b, od + i);
            }
        }
        Ok((min_q, grad))
    }
}

/// Half mean squared error of a critic against fixed targets, and its parameter gradient.
pub fn critic_loss_and_grad(
    params: &DenseParams,
    obs: &Matrix,
    actions: &Matrix,
    y: &[f64],
) -> Result<(f64, DenseParams)> {
    let input = Matrix::hstack(obs, actions)?;
    if y.len() != input.rows() {
        return Err(Error::contract("target count does not match batch size"));
    }
    let (q, cache) = forward(params, &input, OutputActivation::Linear)?;
    let n = y.len() as f64;
    let mut g = Matrix::zeros(y.len(), 1);
    let mut loss = 0.0;
    for (b, &target) in y.iter().enumerate() {
        let d = q.get(b, 0) - target;
        loss += 0.5 * d * d / n;
        g.set(b, 0, d / n);
    }
    Ok((loss, backward(params, &cache, &g)?.params))
}

/// `target ← τ·online + (1 − τ)·target`, element-wise.
pub fn soft_update(online: &DenseParams, target: &mut DenseParams, tau: f64) -> Result<()> {
    if !online.same_shape(target) {
        return Err(Error::contract("soft update between differently shaped networks"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::contract(format!("tau {tau} outside [0, 1]")));
    }
    for (t, o) in target.slices_mut().zip(online.slices()) {
        for (x, y) in t.iter_mut().zip(o) {
            *x = tau * y + (1.0 - tau) * *x;
        }
    }
    Ok(())
}
