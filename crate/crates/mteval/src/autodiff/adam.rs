//! Adam with per-group learning rates and freezing.

use super::{Binding, ParamGroup, ParamSet};

/// Adam hyperparameters; `Default` gives the standard 0.9 / 0.999 / 1e-8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates and step counts, index-aligned with the
/// model's [`ParamSet`]. Persists across steps and into checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: Vec<u64>,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(set: &ParamSet) -> AdamState {
        AdamState {
            m: set.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: set.iter().map(|p| vec![0.0; p.len()]).collect(),
            t: vec![0; set.len()],
            hyper: AdamHyper::default(),
        }
    }
}

/// One optimizer step.
///
/// Unfrozen groups move with their own learning rate; frozen groups are left
/// bit-identical, moments included. A leaf without gradient contributes a
/// zero gradient (the moments still decay).
pub fn adam_step(set: &mut ParamSet, binding: &Binding, groups: &[ParamGroup], state: &mut AdamState) {
    let AdamHyper { beta1, beta2, eps } = state.hyper;
    for group in groups {
        if group.frozen {
            continue;
        }
        for &id in &group.members {
            let grad = binding.leaf(id).grad();
            let n = set.get(id).len();
            let zero;
            let g: &[f64] = match &grad {
                Some(g) => g,
                None => {
                    zero = vec![0.0; n];
                    &zero
                }
            };
            state.t[id] += 1;
            let t = state.t[id];
            let bc1 = 1.0 - beta1.powi(t as i32);
            let bc2 = 1.0 - beta2.powi(t as i32);
            let m = &mut state.m[id];
            let v = &mut state.v[id];
            let value = &mut set.get_mut(id).value;
            for i in 0..n {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                value[i] -= group.learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
