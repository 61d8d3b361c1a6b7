use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Hyperparams, ModelParams};
use crate::error::Result;
use crate::numerics::activation::sigmoid;
use crate::numerics::{linear, linear_backward};
use crate::training::{inverse_frequency_weights, sgd_step, TrainConfig};

type Layers = Vec<(Vec<f64>, Vec<f64>)>;

fn layer_shapes(d: usize, hidden: (usize, usize)) -> [(usize, usize); 3] {
    [(d, hidden.0), (hidden.0, hidden.1), (hidden.1, 1)]
}

fn unflatten(flat: &[f64], shapes: &[(usize, usize)]) -> Layers {
    let mut at = 0;
    shapes
        .iter()
        .map(|&(i, o)| {
            let w = flat[at..at + i * o].to_vec();
            let b = flat[at + i * o..at + i * o + o].to_vec();
            at += i * o + o;
            (w, b)
        })
        .collect()
}

/// Hidden activations (post-ReLU) per layer plus the output logit.
fn forward(layers: &Layers, x: &[f64]) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut acts = vec![x.to_vec()];
    for (k, (w, b)) in layers.iter().enumerate() {
        let mut out = linear(acts.last().expect("non-empty"), w, b)?;
        if k + 1 < layers.len() {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        acts.push(out);
    }
    let out = acts.pop().expect("output layer")[0];
    Ok((acts, out))
}

pub(super) fn logit(layers: &Layers, x: &[f64]) -> Result<f64> {
    Ok(forward(layers, x)?.1)
}

/// Two ReLU hidden layers and a sigmoid output, trained with class-weighted
/// cross-entropy by mini-batch momentum SGD.
pub(super) fn fit(z: &[Vec<f64>], y: &[bool], p: &Hyperparams, seed: u64) -> Result<ModelParams> {
    let shapes = layer_shapes(z[0].len(), p.hidden);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = Vec::new();
    for &(i, o) in &shapes {
        let normal = Normal::new(0.0, (2.0 / i as f64).sqrt()).expect("positive std");
        flat.extend((0..i * o).map(|_| normal.sample(&mut rng)));
        flat.extend(std::iter::repeat_n(0.0, o));
    }
    let counts = [
        y.iter().filter(|&&v| !v).count() as u64,
        y.iter().filter(|&&v| v).count() as u64,
    ];
    let class_w = inverse_frequency_weights(&counts).expect("non-empty labels");
    let config = TrainConfig {
        lr0: p.mlp_lr,
        momentum: 0.9,
        lr_decay_per_epoch: 0.01,
        epochs: p.mlp_epochs,
        weight_decay: 0.0,
        batch_size: p.mlp_batch,
        seed,
    };
    let mut velocity = vec![0.0; flat.len()];
    let mut order: Vec<usize> = (0..z.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let layers = unflatten(&flat, &shapes);
            let mut grads: Layers = shapes.iter().map(|&(i, o)| (vec![0.0; i * o], vec![0.0; o])).collect();
            for &s in chunk {
                let (acts, out) = forward(&layers, &z[s])?;
                let target = f64::from(u8::from(y[s]));
                let mut up = vec![class_w[usize::from(y[s])] * (sigmoid(out) - target) / chunk.len() as f64];
                for k in (0..layers.len()).rev() {
                    let g = linear_backward(&acts[k], &layers[k].0, &up)?;
                    grads[k].0.iter_mut().zip(&g.weights).for_each(|(a, b)| *a += b);
                    grads[k].1.iter_mut().zip(&g.bias).for_each(|(a, b)| *a += b);
                    up = g
                        .input
                        .iter()
                        .zip(&acts[k])
                        .map(|(&gi, &a)| if a > 0.0 || k == 0 { gi } else { 0.0 })
                        .collect();
                }
            }
            let flat_grads: Vec<f64> = grads.into_iter().flat_map(|(w, b)| w.into_iter().chain(b)).collect();
            sgd_step(&mut flat, &mut velocity, &flat_grads, epoch, &config)?;
        }
    }
    Ok(ModelParams::Network {
        layers: unflatten(&flat, &shapes),
    })
}
