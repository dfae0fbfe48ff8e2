use serde::{Deserialize, Serialize};

use super::DenseParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates shaped like the parameters they track.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: DenseParams,
    pub v: DenseParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &DenseParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// Adam moments for a single scalar parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScalarAdamState {
    pub m: f64,
    pub v: f64,
    pub t: u64,
}

struct Corrections {
    step_size: f64,
    v_corr: f64,
}

fn corrections(cfg: &AdamConfig, t: u64) -> Corrections {
    let t = t as f64;
    Corrections {
        step_size: cfg.lr / (1.0 - cfg.beta1.powf(t)),
        v_corr: 1.0 / (1.0 - cfg.beta2.powf(t)),
    }
}

#[inline]
fn update(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, cfg: &AdamConfig, c: &Corrections) {
    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
    *p -= c.step_size * *m / ((*v * c.v_corr).sqrt() + cfg.eps);
}

/// One bias-corrected Adam update. A non-finite gradient leaves parameters
/// and state untouched and returns an error.
pub fn adam_step(params: &mut DenseParams, grads: &DenseParams, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(Error::contract("adam: parameter, gradient and moment shapes differ"));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite {
            what: "gradient".into(),
            step: state.t,
        });
    }
    state.t += 1;
    let c = corrections(cfg, state.t);
    let slices = params
        .slices_mut()
        .zip(grads.slices())
        .zip(state.m.slices_mut().zip(state.v.slices_mut()));
    for ((p, g), (m, v)) in slices {
        for i in 0..p.len() {
            update(&mut p[i], g[i], &mut m[i], &mut v[i], cfg, &c);
        }
    }
    Ok(())
}

/// Scalar variant of [`adam_step`].
pub fn adam_step_scalar(p: &mut f64, g: f64, state: &mut ScalarAdamState, cfg: &AdamConfig) -> Result<()> {
    if !g.is_finite() {
        return Err(Error::NonFinite {
            what: "scalar gradient".into(),
            step: state.t,
        });
    }
    state.t += 1;
    let c = corrections(cfg, state.t);
    update(p, g, &mut state.m, &mut state.v, cfg, &c);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_params;

    fn filled(like: &DenseParams, value: f64) -> DenseParams {
        let mut g = like.zeros_like();
        for s in g.slices_mut() {
            s.fill(value);
        }
        g
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = init_params(1, &[3, 4, 2]).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(&p);
        let g = p.zeros_like();
        adam_step(&mut p, &g, &mut st, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let cfg = AdamConfig::default();
        let mut p = init_params(1, &[3, 2]).unwrap();
        let before = p.to_flat();
        let g = 0.37;
        let mut st = AdamState::new(&p);
        let grads = filled(&p, g);
        adam_step(&mut p, &grads, &mut st, &cfg).unwrap();
        // m̂ = g, v̂ = g², so the step is lr·g / (|g| + eps).
        let expect = cfg.lr * g / (g.abs() + cfg.eps);
        for (a, b) in p.to_flat().iter().zip(&before) {
            assert!((b - a - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn two_step_recurrence() {
        let cfg = AdamConfig::default();
        let g = -1.25;
        let mut x = 0.5;
        let mut st = ScalarAdamState::default();
        adam_step_scalar(&mut x, g, &mut st, &cfg).unwrap();
        adam_step_scalar(&mut x, g, &mut st, &cfg).unwrap();

        // Hand recurrence.
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let mut expect = 0.5;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            expect -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
        assert!((x - expect).abs() < 1e-15);
        // Constant gradient: each step moves by ≈ lr.
        assert!((x - (0.5 + 2.0 * cfg.lr)).abs() < 1e-9);
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_side_effects() {
        let mut p = init_params(1, &[3, 2]).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(&p);
        let mut g = p.zeros_like();
        g.layers[0].weight[1] = f64::NAN;
        assert!(adam_step(&mut p, &g, &mut st, &AdamConfig::default()).is_err());
        assert_eq!(p, before);
        assert_eq!(st.t, 0);
        let mut x = 1.0;
        let mut s = ScalarAdamState::default();
        assert!(adam_step_scalar(&mut x, f64::INFINITY, &mut s, &AdamConfig::default()).is_err());
        assert_eq!(x, 1.0);
    }
}
