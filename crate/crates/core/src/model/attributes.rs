use super::forward::HeadOutputs;
use super::graph::Task;
use crate::error::{Error, Result};
use crate::features::{FrameAttributes, AU_COUNT, EXPR_COUNT};
use crate::numerics::{activation, Activation};

/// Squashes one frame's raw head values: softmax over expression logits,
/// per-unit sigmoid over AU logits, tanh over the affect scalars.
pub fn predict_frame(expr: &[f64], au: &[f64], arousal: f64, valence: f64) -> Result<FrameAttributes> {
    if expr.len() != EXPR_COUNT || au.len() != AU_COUNT {
        return Err(Error::Shape(format!(
            "head widths ({}, {}) != ({EXPR_COUNT}, {AU_COUNT})",
            expr.len(),
            au.len()
        )));
    }
    let mut attrs = FrameAttributes {
        au: [0.0; AU_COUNT],
        expr: [0.0; EXPR_COUNT],
        arousal: arousal.tanh(),
        valence: valence.tanh(),
    };
    attrs.expr.copy_from_slice(&activation(Activation::Softmax, expr));
    attrs.au.copy_from_slice(&activation(Activation::Sigmoid, au));
    Ok(attrs)
}

/// Per-frame attributes for every batch row; needs all four heads.
pub fn predict_attributes(heads: &HeadOutputs) -> Result<Vec<FrameAttributes>> {
    let mut widths = [0usize; 4];
    for (i, task) in Task::ALL.iter().enumerate() {
        let values = heads
            .get(*task)
            .ok_or_else(|| Error::Shape(format!("missing {task} head")))?;
        widths[i] = values.len() / heads.batch.max(1);
    }
    if widths != [EXPR_COUNT, AU_COUNT, 1, 1] {
        return Err(Error::Shape(format!(
            "head widths {widths:?} != [{EXPR_COUNT}, {AU_COUNT}, 1, 1]"
        )));
    }
    (0..heads.batch)
        .map(|n| {
            let row = |t| heads.row(t, n).expect("row exists");
            predict_frame(
                row(Task::Expr),
                row(Task::Au),
                row(Task::Arousal)[0],
                row(Task::Valence)[0],
            )
        })
        .collect()
}
