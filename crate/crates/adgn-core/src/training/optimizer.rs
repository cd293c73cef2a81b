//! Adam with two weight-decay conventions.
//!
//! `L2InGradient` folds the decay into the gradient before the moment
//! updates (classic Adam with an L2 term); `Decoupled` shrinks the
//! parameters directly after the Adam update, independent of the
//! learning rate, so decay keeps acting even at lr = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::ModelParams;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightDecayMode {
    L2InGradient,
    Decoupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default = "default_decay_mode")]
    pub weight_decay_mode: WeightDecayMode,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}
fn default_decay_mode() -> WeightDecayMode {
    WeightDecayMode::L2InGradient
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            weight_decay: 0.0,
            weight_decay_mode: default_decay_mode(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                reason: format!("{} must be finite and non-negative", self.learning_rate),
            });
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must lie in [0, 1)"),
                });
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: "must be positive".to_string(),
            });
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay < 1.0) {
            return Err(Error::InvalidParameter {
                name: "weight_decay",
                reason: format!("{} must lie in [0, 1)", self.weight_decay),
            });
        }
        Ok(())
    }
}

struct MomentSlot {
    name: String,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Per-parameter first/second moments, aligned with the canonical
/// parameter visit order.
pub struct AdamState {
    step: u64,
    slots: Vec<MomentSlot>,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let mut slots = Vec::new();
        params.visit(&mut |name, m| {
            slots.push(MomentSlot {
                name: name.to_string(),
                m: vec![0.0; m.data().len()],
                v: vec![0.0; m.data().len()],
            });
        });
        AdamState { step: 0, slots }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One update. `grads` must follow the canonical visit order
/// ([`ModelParams::visit`]), which is also how bound tape leaves are
/// laid out.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &[Matrix],
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    if grads.len() != state.slots.len() {
        return Err(Error::InvalidParameter {
            name: "grads",
            reason: format!("expected {} gradient matrices, got {}", state.slots.len(), grads.len()),
        });
    }
    for (slot, grad) in state.slots.iter().zip(grads) {
        if grad.data().len() != slot.m.len() {
            return Err(Error::InvalidParameter {
                name: "grads",
                reason: format!("gradient shape for {} does not match parameter", slot.name),
            });
        }
        if !grad.is_finite() {
            return Err(Error::NonFiniteGradient {
                name: slot.name.clone(),
            });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - config.beta1.powi(t);
    let bias2 = 1.0 - config.beta2.powi(t);

    let mut index = 0usize;
    params.visit_mut(&mut |_, matrix| {
        let slot = &mut state.slots[index];
        let grad = grads[index].data();
        let data = matrix.data_mut();
        for i in 0..data.len() {
            let mut g = grad[i];
            if config.weight_decay_mode == WeightDecayMode::L2InGradient {
                g += config.weight_decay * data[i];
            }
            slot.m[i] = config.beta1 * slot.m[i] + (1.0 - config.beta1) * g;
            slot.v[i] = config.beta2 * slot.v[i] + (1.0 - config.beta2) * g * g;
            let m_hat = slot.m[i] / bias1;
            let v_hat = slot.v[i] / bias2;
            data[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
            if config.weight_decay_mode == WeightDecayMode::Decoupled {
                data[i] -= config.weight_decay * data[i];
            }
        }
        index += 1;
    });
    Ok(())
}
