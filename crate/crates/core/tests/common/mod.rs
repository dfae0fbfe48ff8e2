#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softcap::neural::{DenseParams, Matrix};

pub mod physics;
pub mod sac_checks;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_ABS_FLOOR: f64 = 1e-8;

/// Central difference of `f` at `x` along every coordinate.
pub fn numeric_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + FD_STEP;
            let up = f(&x);
            x[i] = orig - FD_STEP;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Index and values of the first coordinate outside tolerance, if any.
pub fn first_grad_mismatch(analytic: &[f64], numeric: &[f64]) -> Option<(usize, f64, f64)> {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).enumerate().find_map(|(i, (&a, &n))| {
        let tol = (FD_REL_TOL * a.abs().max(n.abs())).max(FD_ABS_FLOOR);
        ((a - n).abs() > tol).then_some((i, a, n))
    })
}

pub fn assert_grad_close(what: &str, analytic: &[f64], numeric: &[f64]) {
    if let Some((i, a, n)) = first_grad_mismatch(analytic, numeric) {
        panic!("{what}: coordinate {i}: analytic {a} vs numeric {n}");
    }
}

pub fn with_flat(like: &DenseParams, flat: &[f64]) -> DenseParams {
    let mut p = like.clone();
    p.set_flat(flat).unwrap();
    p
}

pub fn random_matrix(seed: u64, rows: usize, cols: usize, scale: f64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub mod grad_checks {
    use super::*;
    use softcap::neural::{backward, forward, init_params, OutputActivation};
    use softcap::sac::{critic_loss_and_grad, policy_loss_and_grad, standard_normal, PolicyNet, TwinCritics};

    pub type Check = Result<(), String>;

    fn compare(what: &str, analytic: &[f64], numeric: &[f64]) -> Check {
        match first_grad_mismatch(analytic, numeric) {
            None => Ok(()),
            Some((i, a, n)) => Err(format!("{what}: coordinate {i}: analytic {a} vs numeric {n}")),
        }
    }

    /// Scalar loss `Σ out ⊙ w` for fixed random weights `w`, checked for
    /// every parameter and every input entry.
    pub fn dense(seed: u64, sizes: &[usize], act: OutputActivation) -> Check {
        let p = init_params(seed, sizes).unwrap();
        let batch = 4;
        let x = random_matrix(seed + 100, batch, sizes[0], 1.5);
        let w = random_matrix(seed + 200, batch, *sizes.last().unwrap(), 1.0);
        let loss = |p: &DenseParams, x: &Matrix| -> f64 {
            let (y, _) = forward(p, x, act).unwrap();
            y.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = forward(&p, &x, act).unwrap();
        let g = backward(&p, &cache, &w).unwrap();
        let num = numeric_grad(|f| loss(&with_flat(&p, f), &x), &p.to_flat());
        compare("parameters", &g.params.to_flat(), &num)?;
        let num_x = numeric_grad(
            |f| loss(&p, &Matrix::from_vec(batch, sizes[0], f.to_vec()).unwrap()),
            x.as_slice(),
        );
        compare("input", g.input.as_slice(), &num_x)
    }

    /// Gradient of `Σ_b (g_a·a_b + g_lp·log π_b)` for a fixed noise draw.
    pub fn log_prob(seed: u64) -> Check {
        let (obs_dim, act_dim) = (5, 3);
        let mut policy = PolicyNet::new(seed, obs_dim, &[16], act_dim).unwrap();
        // Keep log-stds well inside the clamp so the map is smooth.
        for b in &mut policy.params.layers.last_mut().unwrap().bias[act_dim..] {
            *b = -0.5;
        }
        let obs = random_matrix(seed + 1, 4, obs_dim, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
        let noise = standard_normal(4, act_dim, &mut rng);
        let ga = random_matrix(seed + 3, 4, act_dim, 1.0);
        let glp: Vec<f64> = (0..4).map(|i| 0.3 + 0.2 * i as f64).collect();
        let objective = |pol: &PolicyNet| -> f64 {
            let s = pol.sample_with_noise(&obs, noise.clone()).unwrap();
            let act: f64 = s.actions.as_slice().iter().zip(ga.as_slice()).map(|(a, g)| a * g).sum();
            act + s.log_probs.iter().zip(&glp).map(|(l, g)| l * g).sum::<f64>()
        };
        let s = policy.sample_with_noise(&obs, noise.clone()).unwrap();
        let analytic = policy.backward_sample(&s, &ga, &glp).unwrap().params.to_flat();
        let num = numeric_grad(
            |f| objective(&PolicyNet::from_params(with_flat(&policy.params, f), act_dim).unwrap()),
            &policy.params.to_flat(),
        );
        compare("log-prob", &analytic, &num)
    }

    fn frozen_batch(seed: u64, obs_dim: usize, act_dim: usize) -> (Matrix, Matrix, Vec<f64>) {
        let obs = random_matrix(seed, 4, obs_dim, 1.0);
        let act = random_matrix(seed + 1, 4, act_dim, 0.9);
        let y = vec![0.7, -1.2, 0.1, 2.5];
        (obs, act, y)
    }

    pub fn critic_loss(seed: u64) -> Check {
        let (obs_dim, act_dim) = (5, 3);
        let critics = TwinCritics::new(seed, obs_dim, act_dim, &[16, 16]).unwrap();
        let (obs, act, y) = frozen_batch(seed + 10, obs_dim, act_dim);
        for q in [&critics.q1, &critics.q2] {
            let (_, g) = critic_loss_and_grad(q, &obs, &act, &y).unwrap();
            let num = numeric_grad(
                |f| critic_loss_and_grad(&with_flat(q, f), &obs, &act, &y).unwrap().0,
                &q.to_flat(),
            );
            compare("critic loss", &g.to_flat(), &num)?;
        }
        Ok(())
    }

    pub fn policy_loss(seed: u64) -> Check {
        let (obs_dim, act_dim) = (5, 3);
        let mut policy = PolicyNet::new(seed, obs_dim, &[16, 16], act_dim).unwrap();
        for b in &mut policy.params.layers.last_mut().unwrap().bias[act_dim..] {
            *b = -0.7;
        }
        let critics = TwinCritics::new(seed + 5, obs_dim, act_dim, &[16, 16]).unwrap();
        let obs = random_matrix(seed + 20, 4, obs_dim, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 21);
        let noise = standard_normal(4, act_dim, &mut rng);
        let alpha = 0.35;
        let loss_at = |pol: &PolicyNet| {
            let s = pol.sample_with_noise(&obs, noise.clone()).unwrap();
            policy_loss_and_grad(pol, &critics, &obs, &s, alpha).unwrap()
        };
        let (_, g) = loss_at(&policy);
        let num = numeric_grad(
            |f| loss_at(&PolicyNet::from_params(with_flat(&policy.params, f), act_dim).unwrap()).0,
            &policy.params.to_flat(),
        );
        compare("policy loss", &g.to_flat(), &num)
    }
}
