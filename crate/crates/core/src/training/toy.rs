use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::augment::{augment_with, AugmentConfig};
use super::labels::{class_weights, LabelHistogram, TaskLabels};
use super::loss::batch_objective;
use super::sgd::{sgd_step, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{AU_COUNT, EXPR_COUNT};
use crate::model::{
    backward, build_graph_with, count_params, forward_trace, init_params, CuHyperparams, CuKind,
    GraphConfig, ModelGraph, TaskMode,
};
use crate::numerics::Tensor4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub images: usize,
    pub image_size: usize,
    pub channels: usize,
    /// Apply random augmentation to every batch.
    pub augment: bool,
    pub train: TrainConfig,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            images: 200,
            image_size: 16,
            channels: 16,
            augment: false,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySample {
    /// `[1, 3, size, size]`.
    pub image: Tensor4,
    pub labels: TaskLabels,
}

// fixed colour cue per expression category
const EXPR_COLOURS: [[f64; 3]; EXPR_COUNT] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [-1.0, -1.0, -1.0],
];

/// Images whose content encodes the labels: a colour offset per expression,
/// horizontal and vertical ramps scaled by arousal and valence, and one
/// oriented grating per active AU. Even-indexed samples carry
/// expression/arousal/valence labels, odd-indexed samples carry AU labels.
pub fn synthetic_images(count: usize, size: usize, seed: u64) -> Result<Vec<ToySample>> {
    if size < 4 {
        return Err(Error::InvalidArgument(format!("toy image size {size} < 4")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.1).expect("positive std");
    let half = (size as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let expr = rng.random_range(0..EXPR_COUNT);
        let au: [bool; AU_COUNT] = std::array::from_fn(|_| rng.random::<f64>() < 0.3);
        let arousal = rng.random_range(-0.9..0.9);
        let valence = rng.random_range(-0.9..0.9);
        let mut image = Tensor4::from_fn([1, 3, size, size], |_, c, y, x| {
            let (u, v) = ((x as f64 - half) / half, (y as f64 - half) / half);
            let mut p = 0.5 * EXPR_COLOURS[expr][c];
            match c {
                1 => p += arousal * u,
                2 => p += valence * v,
                _ => {}
            }
            for (k, &on) in au.iter().enumerate() {
                if on && k % 3 == c {
                    let angle = std::f64::consts::PI * k as f64 / AU_COUNT as f64;
                    let freq = 2.0 + (k / 3) as f64;
                    p += 0.4 * (freq * (angle.cos() * u + angle.sin() * v) * std::f64::consts::PI).sin();
                }
            }
            p
        });
        for value in image.data_mut() {
            *value += noise.sample(&mut rng);
        }
        let labels = if i % 2 == 0 {
            TaskLabels::new(Some(expr), [None; AU_COUNT], Some(arousal), Some(valence))?
        } else {
            TaskLabels::new(None, au.map(Some), None, None)?
        };
        out.push(ToySample { image, labels });
    }
    Ok(out)
}

/// Two-layer multi-task network: one 3x3 conv (with affine and ReLU),
/// global pooling, then the four linear heads.
pub fn toy_graph(size: usize, channels: usize) -> Result<ModelGraph> {
    build_graph_with(GraphConfig {
        input_channels: 3,
        input_size: (size, size),
        stem_channels: channels,
        stem_stride: 1,
        stages: Vec::new(),
        final_dw_channels: None,
        cu: CuKind::Bottleneck,
        mode: TaskMode::MultiTask,
        hyper: CuHyperparams::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean over batches of the batch objective, each evaluated before its step.
    pub mean_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyTrainingReport {
    pub config: ToyConfig,
    pub parameter_count: u64,
    pub epochs: Vec<EpochRecord>,
}

impl ToyTrainingReport {
    pub fn first_objective(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.mean_objective)
    }

    pub fn last_objective(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.mean_objective)
    }
}

pub fn train_toy(config: &ToyConfig) -> Result<ToyTrainingReport> {
    config.train.validate()?;
    if config.images == 0 {
        return Err(Error::InvalidArgument("toy training needs at least one image".into()));
    }
    let tc = &config.train;
    let samples = synthetic_images(config.images, config.image_size, tc.seed)?;
    let graph = toy_graph(config.image_size, config.channels)?;
    let mut params = init_params(&graph, tc.seed.wrapping_add(1));
    let mut velocity = vec![0.0; params.len()];
    let weights = class_weights(&LabelHistogram::from_labels(samples.iter().map(|s| &s.labels)))?;
    let aug = AugmentConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..samples.len()).collect();

    let mut epochs = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(tc.batch_size) {
            let images: Vec<&Tensor4> = chunk.iter().map(|&i| &samples[i].image).collect();
            let mut batch = Tensor4::stack(&images)?;
            if config.augment {
                batch = augment_with(&batch, rng.random(), &aug)?;
            }
            let labels: Vec<TaskLabels> = chunk.iter().map(|&i| samples[i].labels).collect();
            let trace = forward_trace(&graph, &params, &batch)?;
            let objective = batch_objective(&trace.heads(&graph), &labels, &weights, &params, tc.weight_decay)?;
            let mut grads = backward(&graph, &params, &trace, &objective.head_adjoints)?;
            for (g, p) in grads.as_mut_slice().iter_mut().zip(params.as_slice()) {
                *g += 2.0 * tc.weight_decay * p;
            }
            sgd_step(params.as_mut_slice(), &mut velocity, grads.as_slice(), epoch, tc)?;
            sum += objective.total();
            batches += 1;
        }
        let mean = sum / batches as f64;
        if !mean.is_finite() {
            return Err(Error::DegenerateTraining(format!("objective diverged at epoch {epoch}")));
        }
        epochs.push(EpochRecord {
            epoch,
            learning_rate: tc.learning_rate(epoch),
            mean_objective: mean,
        });
    }
    Ok(ToyTrainingReport {
        config: config.clone(),
        parameter_count: count_params(&graph),
        epochs,
    })
}
