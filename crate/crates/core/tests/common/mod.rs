//! Helpers shared by the integration tests.
#![allow(dead_code)]

use dmim3d::channel::{snr_db_to_n0, RngStream};
use dmim3d::config::Setup;
use dmim3d::link::{draw_sample, LinkSample};
use dmim3d::nn::{target_matrix, FeatureBatch, MlpModel};
use ndarray::Array2;
use rand::RngCore;

pub fn default_setup() -> Setup {
    Setup::with_defaults(4, 2, 2, 2).unwrap()
}

pub fn samples(setup: &Setup, seed: u64, count: usize, snr_db: f64) -> Vec<LinkSample> {
    let mut rng = RngStream::new(seed, 7);
    (0..count)
        .map(|_| draw_sample(setup, &mut rng, snr_db_to_n0(snr_db), false).unwrap())
        .collect()
}

/// Batch-mean squared error computed from the forward pass only.
pub fn forward_loss(model: &MlpModel, batch: &FeatureBatch, targets: &Array2<f64>) -> f64 {
    let out = model.forward_features(batch).unwrap();
    let mut sum = 0.0;
    for (o, t) in out.iter().zip(targets.iter()) {
        sum += (o - t) * (o - t);
    }
    sum / out.len() as f64
}

/// One parameter addressed by layer, then flat position (weights row-major,
/// then biases).
#[derive(Debug, Clone, Copy)]
pub struct ParamRef {
    pub layer: usize,
    pub offset: usize,
}

fn param_mut(model: &mut MlpModel, p: ParamRef) -> &mut f64 {
    let l = &mut model.layers[p.layer];
    let cols = l.weight.ncols();
    let w = l.weight.len();
    if p.offset < w {
        &mut l.weight[[p.offset / cols, p.offset % cols]]
    } else {
        &mut l.bias[p.offset - w]
    }
}

/// Draws `count` parameters uniformly over the whole model.
pub fn random_params(model: &MlpModel, count: usize, seed: u64) -> Vec<ParamRef> {
    let sizes: Vec<usize> = model.layers.iter().map(|l| l.weight.len() + l.bias.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = RngStream::new(seed, 99);
    (0..count)
        .map(|_| {
            let mut flat = (rng.next_u64() % total as u64) as usize;
            let mut layer = 0;
            while flat >= sizes[layer] {
                flat -= sizes[layer];
                layer += 1;
            }
            ParamRef { layer, offset: flat }
        })
        .collect()
}

/// Central difference of the forward-only loss.
pub fn numeric_gradient(model: &MlpModel, batch: &FeatureBatch, targets: &Array2<f64>, p: ParamRef, step: f64) -> f64 {
    let mut m = model.clone();
    let orig = *param_mut(&mut m, p);
    *param_mut(&mut m, p) = orig + step;
    let plus = forward_loss(&m, batch, targets);
    *param_mut(&mut m, p) = orig - step;
    let minus = forward_loss(&m, batch, targets);
    (plus - minus) / (2.0 * step)
}

pub fn analytic_gradient(grads: &dmim3d::nn::Gradients, p: ParamRef) -> f64 {
    let (w, b) = &grads.layers[p.layer];
    if p.offset < w.len() {
        w[[p.offset / w.ncols(), p.offset % w.ncols()]]
    } else {
        b[p.offset - w.len()]
    }
}

pub struct GradCheck {
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Compares backprop with central differences on `count` random parameters
/// of `model` for a batch of link samples.
pub fn gradient_check(model: &MlpModel, setup: &Setup, count: usize, seed: u64) -> GradCheck {
    let s = samples(setup, seed, 8, 10.0);
    let batch = FeatureBatch::from_samples(&s, setup.system.n, setup.energy_source).unwrap();
    let targets = target_matrix(&s, setup.system.bits_per_block);
    let (_, grads) =
        dmim3d::nn::backward_batch(model, batch.energy.view(), batch.reim.view(), targets.view()).unwrap();
    let mut max_rel_error: f64 = 0.0;
    for p in random_params(model, count, seed) {
        let a = analytic_gradient(&grads, p);
        let n = numeric_gradient(model, &batch, &targets, p, 1e-6);
        let scale = a.abs().max(n.abs());
        let rel = if scale == 0.0 { 0.0 } else { (a - n).abs() / scale };
        max_rel_error = max_rel_error.max(rel);
    }
    GradCheck { max_rel_error, checked: count }
}
