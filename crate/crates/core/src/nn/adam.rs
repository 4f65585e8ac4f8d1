use serde::{Deserialize, Serialize};

use super::{Gradients, MlpParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("{field}.lr"), "must be positive"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(
                    format!("{field}.{name}"),
                    "must lie in [0, 1)",
                ));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config(
                format!("{field}.epsilon"),
                "must be positive",
            ));
        }
        Ok(())
    }
}

/// Whether the update climbs or descends the objective whose gradient is supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

/// Moment estimates for one network.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: Gradients::zeros_like(params),
            second_moment: Gradients::zeros_like(params),
            step_count: 0,
        }
    }
}

/// One bias-corrected Adam update applied in `direction`.
///
/// Nothing is modified if the gradients contain a non-finite entry or do not
/// match the parameter shapes.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &Gradients,
    state: &mut AdamState,
    direction: Direction,
) -> Result<()> {
    if !grads.matches(params) || !state.first_moment.matches(params) {
        return Err(Error::shape(
            "adam gradients",
            format!("{} parameters", params.num_params()),
            format!("{} entries", grads.to_flat().len()),
        ));
    }
    for (i, g) in grads.layers.iter().enumerate() {
        if !g.weights.is_finite() || g.biases.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { layer: i });
        }
    }

    state.step_count += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step_count as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    let sign = match direction {
        Direction::Ascend => 1.0,
        Direction::Descend => -1.0,
    };

    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p += sign * (lr * m_hat / (v_hat.sqrt() + epsilon));
    };

    for (((layer, g), m), v) in params
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.first_moment.layers)
        .zip(&mut state.second_moment.layers)
    {
        for (((p, &gv), mv), vv) in layer
            .weights
            .data_mut()
            .iter_mut()
            .zip(g.weights.data())
            .zip(m.weights.data_mut())
            .zip(v.weights.data_mut())
        {
            update(p, gv, mv, vv);
        }
        for (((p, &gv), mv), vv) in layer
            .biases
            .iter_mut()
            .zip(&g.biases)
            .zip(&mut m.biases)
            .zip(&mut v.biases)
        {
            update(p, gv, mv, vv);
        }
    }
    Ok(())
}
