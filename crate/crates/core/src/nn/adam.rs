use ndarray::Zip;

use super::{Gradients, MlpModel};
use crate::error::{Error, Result};

/// Adam moments and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Gradients,
    pub second: Gradients,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new(model: &MlpModel, learning_rate: f64) -> Self {
        Self {
            first: Gradients::zeros_like(model),
            second: Gradients::zeros_like(model),
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(model: &mut MlpModel, state: &mut AdamState, grads: &Gradients) -> Result<()> {
    let shapes_match = model.layers.len() == grads.layers.len()
        && model
            .layers
            .iter()
            .zip(&grads.layers)
            .zip(state.first.layers.iter().zip(&state.second.layers))
            .all(|((l, g), (m, v))| {
                l.weight.dim() == g.0.dim()
                    && l.bias.dim() == g.1.dim()
                    && m.0.dim() == g.0.dim()
                    && v.1.dim() == g.1.dim()
            });
    if !shapes_match {
        return Err(Error::ShapeMismatch("gradient does not match the model".into()));
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let update = move |p: &mut f64, m: &mut f64, v: &mut f64, g: &f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    };

    for (((layer, g), m), v) in model
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.first.layers)
        .zip(&mut state.second.layers)
    {
        Zip::from(&mut layer.weight)
            .and(&mut m.0)
            .and(&mut v.0)
            .and(&g.0)
            .for_each(update);
        Zip::from(&mut layer.bias)
            .and(&mut m.1)
            .and(&mut v.1)
            .and(&g.1)
            .for_each(update);
    }
    Ok(())
}
