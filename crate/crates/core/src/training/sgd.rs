use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr0: f64,
    pub momentum: f64,
    /// Learning rate shrinks by this fraction every epoch.
    pub lr_decay_per_epoch: f64,
    pub epochs: usize,
    /// Coefficient of the squared-norm penalty.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 0.01,
            momentum: 0.9,
            lr_decay_per_epoch: 0.05,
            epochs: 30,
            weight_decay: 1e-4,
            batch_size: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return bad("lr0 must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.lr_decay_per_epoch) {
            return bad("lr decay must be in [0, 1)");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight decay must be non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        Ok(())
    }

    /// `lr0 * (1 - decay)^epoch`.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.lr0 * (1.0 - self.lr_decay_per_epoch).powi(epoch as i32)
    }
}

/// One momentum step in place: `v <- mu v - lr g`, `p <- p + v`.
pub fn sgd_step(
    params: &mut [f64],
    velocity: &mut [f64],
    grads: &[f64],
    epoch: usize,
    config: &TrainConfig,
) -> Result<()> {
    if params.len() != velocity.len() || params.len() != grads.len() {
        return Err(Error::Shape(format!(
            "sgd lengths differ: params {}, velocity {}, grads {}",
            params.len(),
            velocity.len(),
            grads.len()
        )));
    }
    if let Some(bad) = grads.iter().find(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient {bad}")));
    }
    let lr = config.learning_rate(epoch);
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        *v = config.momentum * *v - lr * g;
        *p += *v;
    }
    Ok(())
}
