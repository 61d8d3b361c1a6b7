use serde::{Deserialize, Serialize};

use super::labels::{ClassWeights, TaskLabels};
use crate::error::{Error, Result};
use crate::features::{AU_COUNT, EXPR_COUNT};
use crate::model::{HeadOutputs, ParamSet, Task};
use crate::numerics::activation::{sigmoid, softmax};

/// `w * (logsumexp(z) - z_target)` and its adjoint with respect to `z`.
/// Any number of classes; `weights` is indexed by class.
pub fn weighted_cross_entropy(logits: &[f64], target: usize, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() || weights.len() != logits.len() {
        return Err(Error::Shape(format!(
            "cross-entropy target {target} with {} logits and {} weights",
            logits.len(),
            weights.len()
        )));
    }
    let w = weights[target];
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    grad.iter_mut().for_each(|g| *g *= w);
    Ok((w * (lse - logits[target]), grad))
}

/// Stable weighted binary cross-entropy on a logit.
pub fn weighted_binary_cross_entropy(logit: f64, target: bool, weight: f64) -> (f64, f64) {
    let y = if target { 1.0 } else { 0.0 };
    let loss = logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p();
    (weight * loss, weight * (sigmoid(logit) - y))
}

fn check_width(task: Task, head: &[f64]) -> Result<()> {
    if head.len() != task.width() {
        return Err(Error::Shape(format!(
            "{task} head has width {}, expected {}",
            head.len(),
            task.width()
        )));
    }
    Ok(())
}

fn affect_target(task: Task, t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("{task} target {t} outside [-1, 1]")));
    }
    Ok(t)
}

/// Loss of one task head for one sample, with the adjoint with respect to the
/// raw head. UNK labels give `(0, zeros)`.
///
/// Expression uses weighted softmax cross-entropy; AU the mean weighted binary
/// cross-entropy over the known units; arousal L1 and valence L2 on
/// `tanh(head)`.
pub fn task_loss(task: Task, head: &[f64], labels: &TaskLabels, weights: &ClassWeights) -> Result<(f64, Vec<f64>)> {
    check_width(task, head)?;
    if let Some(bad) = head.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("{task} head value {bad}")));
    }
    let mut grad = vec![0.0; head.len()];
    let loss = match task {
        Task::Expr => match labels.expr {
            None => 0.0,
            Some(c) => {
                if c >= EXPR_COUNT {
                    return Err(Error::InvalidArgument(format!("expression label {c}")));
                }
                let (l, g) = weighted_cross_entropy(head, c, &weights.expr)?;
                grad = g;
                l
            }
        },
        Task::Au => {
            let known = labels.au.iter().filter(|v| v.is_some()).count();
            if weights.au.len() != AU_COUNT {
                return Err(Error::Shape(format!("{} AU weight pairs", weights.au.len())));
            }
            let mut total = 0.0;
            for u in 0..AU_COUNT {
                if let Some(y) = labels.au[u] {
                    let w = weights.au[u][usize::from(y)];
                    let (l, g) = weighted_binary_cross_entropy(head[u], y, w);
                    total += l;
                    grad[u] = g / known as f64;
                }
            }
            if known == 0 {
                0.0
            } else {
                total / known as f64
            }
        }
        Task::Arousal | Task::Valence => {
            let target = if task == Task::Arousal { labels.arousal } else { labels.valence };
            match target {
                None => 0.0,
                Some(t) => {
                    let t = affect_target(task, t)?;
                    let p = head[0].tanh();
                    let d = p - t;
                    let dtanh = 1.0 - p * p;
                    if task == Task::Arousal {
                        grad[0] = if d == 0.0 { 0.0 } else { d.signum() * dtanh };
                        d.abs()
                    } else {
                        grad[0] = 2.0 * d * dtanh;
                        d * d
                    }
                }
            }
        }
    };
    Ok((loss, grad))
}

/// Sum over samples and tasks of the masked task losses plus
/// `lambda * ||params||^2`.
pub fn multitask_loss(
    heads: &HeadOutputs,
    labels: &[TaskLabels],
    weights: &ClassWeights,
    params: &ParamSet,
    lambda: f64,
) -> Result<f64> {
    let (data, _) = data_loss(heads, labels, weights)?;
    Ok(data + lambda * params.squared_norm())
}

fn data_loss(heads: &HeadOutputs, labels: &[TaskLabels], weights: &ClassWeights) -> Result<(f64, HeadOutputs)> {
    if labels.len() != heads.batch {
        return Err(Error::Shape(format!(
            "{} label rows for a batch of {}",
            labels.len(),
            heads.batch
        )));
    }
    for t in heads.tasks() {
        let len = heads.get(t).map_or(0, <[f64]>::len);
        if len != heads.batch * t.width() {
            return Err(Error::Shape(format!("{t} head has {len} values for batch {}", heads.batch)));
        }
    }
    let mut adj = HeadOutputs {
        batch: heads.batch,
        heads: heads.heads.iter().map(|(t, v)| (*t, vec![0.0; v.len()])).collect(),
    };
    let mut total = 0.0;
    for (i, l) in labels.iter().enumerate() {
        if Task::ALL.iter().all(|&t| l.is_unknown(t)) {
            return Err(Error::InvalidArgument(format!("sample {i} has every task UNK")));
        }
        for t in heads.tasks() {
            if l.is_unknown(t) {
                continue;
            }
            let row = heads.row(t, i).expect("width checked");
            let (loss, g) = task_loss(t, row, l, weights)?;
            total += loss;
            let w = t.width();
            adj.get_mut(t).expect("same tasks")[i * w..(i + 1) * w].copy_from_slice(&g);
        }
    }
    Ok((total, adj))
}

/// Mean-over-batch objective and its head adjoints, ready for `backward`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchObjective {
    pub data_loss: f64,
    pub regularizer: f64,
    pub head_adjoints: HeadOutputs,
}

impl BatchObjective {
    pub fn total(&self) -> f64 {
        self.data_loss + self.regularizer
    }
}

/// `(1/B) * sum of masked losses + lambda * ||params||^2`.
pub fn batch_objective(
    heads: &HeadOutputs,
    labels: &[TaskLabels],
    weights: &ClassWeights,
    params: &ParamSet,
    lambda: f64,
) -> Result<BatchObjective> {
    let (total, mut adj) = data_loss(heads, labels, weights)?;
    let scale = 1.0 / heads.batch.max(1) as f64;
    for (_, v) in &mut adj.heads {
        v.iter_mut().for_each(|g| *g *= scale);
    }
    Ok(BatchObjective {
        data_loss: total * scale,
        regularizer: lambda * params.squared_norm(),
        head_adjoints: adj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels_expr(c: usize) -> TaskLabels {
        TaskLabels::new(Some(c), [None; AU_COUNT], None, None).unwrap()
    }

    #[test]
    fn confident_expression_has_near_zero_loss() {
        let mut z = vec![-50.0; EXPR_COUNT];
        z[2] = 50.0;
        let (l, _) = task_loss(Task::Expr, &z, &labels_expr(2), &ClassWeights::uniform()).unwrap();
        assert!(l < 1e-12);
    }

    #[test]
    fn uniform_logits_give_log_classes() {
        let z = vec![0.0; EXPR_COUNT];
        let (l, _) = task_loss(Task::Expr, &z, &labels_expr(5), &ClassWeights::uniform()).unwrap();
        assert!((l - (EXPR_COUNT as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn arousal_and_valence_examples() {
        let labels = TaskLabels::new(None, [None; AU_COUNT], Some(0.2), Some(0.2)).unwrap();
        let w = ClassWeights::uniform();
        let head = [0.5f64.atanh()];
        let (a, _) = task_loss(Task::Arousal, &head, &labels, &w).unwrap();
        let (v, _) = task_loss(Task::Valence, &head, &labels, &w).unwrap();
        assert!((a - 0.3).abs() < 1e-12);
        assert!((v - 0.09).abs() < 1e-12);
    }

    #[test]
    fn unknown_task_is_free() {
        let labels = labels_expr(0);
        let (l, g) = task_loss(Task::Au, &[3.0; AU_COUNT], &labels, &ClassWeights::uniform()).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_width_is_shape_error() {
        let r = task_loss(Task::Expr, &[0.0; 3], &labels_expr(0), &ClassWeights::uniform());
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn bce_is_stable_for_large_logits() {
        let (l, g) = weighted_binary_cross_entropy(800.0, true, 1.0);
        assert!(l.abs() < 1e-300 && g.abs() < 1e-300);
        let (l, _) = weighted_binary_cross_entropy(-800.0, true, 1.0);
        assert!((l - 800.0).abs() < 1e-9);
    }
}
