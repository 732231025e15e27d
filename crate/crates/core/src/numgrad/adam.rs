use super::mlp::{MlpParams, MlpSpec};
use crate::error::{numeric_err, param_err, shape_err, Result};

/// Adam hyperparameters. `weight_decay` is decoupled: each step subtracts
/// `lr * weight_decay * w` from weights (never from biases).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(param_err!(
                "learning rate {} must be finite and nonnegative",
                self.lr
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(param_err!("{name} = {b} outside [0, 1)"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(param_err!("epsilon {} must be positive", self.epsilon));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(param_err!(
                "weight decay {} must be nonnegative",
                self.weight_decay
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: MlpParams,
    pub v: MlpParams,
    pub t: u64,
    pub hyper: AdamConfig,
}

impl AdamState {
    pub fn new(spec: &MlpSpec, hyper: AdamConfig) -> Self {
        AdamState {
            m: MlpParams::zeros(spec),
            v: MlpParams::zeros(spec),
            t: 0,
            hyper,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut MlpParams, grads: &MlpParams) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(shape_err!(
            "parameter, gradient and optimizer shapes differ"
        ));
    }
    if !grads.is_finite() {
        return Err(numeric_err!("non-finite gradient"));
    }
    state.t += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
        weight_decay,
    } = state.hyper;
    let t = state.t as f64;
    let bc1 = 1.0 - libm::pow(beta1, t);
    let bc2 = 1.0 - libm::pow(beta2, t);

    let n_weights = params.weights.len();
    let tensors = params
        .tensors_mut()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut().zip(state.v.tensors_mut()));
    for (i, ((p, g), (m, v))) in tensors.enumerate() {
        let decay = if i < n_weights {
            lr * weight_decay
        } else {
            0.0
        };
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p = *p - decay * *p - lr * m_hat / (libm::sqrt(v_hat) + epsilon);
        }
    }
    Ok(())
}
