mod common;

use common::grad_checks;
use softcap::neural::OutputActivation;

#[test]
fn dense_gradients_match_finite_differences() {
    let shapes: [&[usize]; 4] = [&[3, 1], &[4, 16, 2], &[6, 16, 16, 3], &[16, 16, 16, 16]];
    for (k, sizes) in shapes.iter().enumerate() {
        for act in [OutputActivation::Linear, OutputActivation::Tanh] {
            grad_checks::dense(k as u64 * 7 + 1, sizes, act).unwrap();
        }
    }
}

#[test]
fn squashed_log_prob_gradients_match_finite_differences() {
    for seed in 0..5 {
        grad_checks::log_prob(seed).unwrap();
    }
}

#[test]
fn critic_loss_gradients_match_finite_differences() {
    for seed in 0..3 {
        grad_checks::critic_loss(seed).unwrap();
    }
}

#[test]
fn policy_loss_gradients_match_finite_differences() {
    for seed in 0..3 {
        grad_checks::policy_loss(seed).unwrap();
    }
}
