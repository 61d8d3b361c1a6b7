use serde::{Deserialize, Serialize};

use super::{logit, Hyperparams, ModelParams};
use crate::numerics::activation::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    /// Goes left when `x[feature] < threshold`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

pub(super) fn eval(tree: &[TreeNode], x: &[f64]) -> f64 {
    let mut at = 0;
    loop {
        match tree[at] {
            TreeNode::Leaf { value } => return value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => at = if x[feature] < threshold { left } else { right },
        }
    }
}

fn log_loss(f: &[f64], y: &[f64]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&s, &t)| s.max(0.0) - s * t + (-s.abs()).exp().ln_1p())
        .sum::<f64>()
        / f.len() as f64
}

struct Builder<'a> {
    z: &'a [Vec<f64>],
    g: &'a [f64],
    h: &'a [f64],
    lambda: f64,
    max_depth: usize,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.lambda)
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let gs: f64 = rows.iter().map(|&i| self.g[i]).sum();
        let hs: f64 = rows.iter().map(|&i| self.h[i]).sum();
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: -gs / (hs + self.lambda),
        });
        if depth >= self.max_depth || rows.len() < 2 {
            return id;
        }
        let parent = self.score(gs, hs);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..self.z[0].len() {
            let mut sorted = rows.clone();
            sorted.sort_by(|&a, &b| self.z[a][f].total_cmp(&self.z[b][f]));
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..sorted.len() - 1 {
                let i = sorted[k];
                gl += self.g[i];
                hl += self.h[i];
                let (a, b) = (self.z[i][f], self.z[sorted[k + 1]][f]);
                if a == b {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(gs - gl, hs - hl) - parent;
                if gain > 1e-12 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, 0.5 * (a + b)));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.z[i][feature] < threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Newton boosting of depth-limited regression trees on the log loss,
/// starting from the logit of the base rate.
pub(super) fn fit(z: &[Vec<f64>], labels: &[bool], p: &Hyperparams) -> ModelParams {
    let n = z.len();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let base_score = logit(y.iter().sum::<f64>() / n as f64);
    let mut f = vec![base_score; n];
    let mut trees = Vec::with_capacity(p.trees);
    let mut losses = Vec::with_capacity(p.trees);
    for _ in 0..p.trees {
        let prob: Vec<f64> = f.iter().map(|&s| sigmoid(s)).collect();
        let g: Vec<f64> = prob.iter().zip(&y).map(|(p, t)| p - t).collect();
        let h: Vec<f64> = prob.iter().map(|p| p * (1.0 - p)).collect();
        let mut b = Builder {
            z,
            g: &g,
            h: &h,
            lambda: p.tree_lambda,
            max_depth: p.tree_depth,
            nodes: Vec::new(),
        };
        b.build((0..n).collect(), 0);
        let tree = b.nodes;
        for (fi, row) in f.iter_mut().zip(z) {
            *fi += p.shrinkage * eval(&tree, row);
        }
        losses.push(log_loss(&f, &y));
        trees.push(tree);
    }
    ModelParams::Boosted {
        base_score,
        shrinkage: p.shrinkage,
        trees,
        losses,
    }
}
