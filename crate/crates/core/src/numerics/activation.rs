use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
    Tanh,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Applies `kind` elementwise (softmax over the whole vector).
pub fn activation(kind: Activation, x: &[f64]) -> Vec<f64> {
    match kind {
        Activation::Relu => x.iter().map(|v| v.max(0.0)).collect(),
        Activation::Sigmoid => x.iter().map(|&v| sigmoid(v)).collect(),
        Activation::Tanh => x.iter().map(|v| v.tanh()).collect(),
        Activation::Softmax if x.is_empty() => Vec::new(),
        Activation::Softmax => softmax(x),
    }
}

/// Adjoint of [`activation`] at input `x` for upstream adjoint `upstream`.
pub fn activation_backward(kind: Activation, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    if x.len() != upstream.len() {
        return Err(Error::Shape(format!(
            "activation adjoint length {} != {}",
            upstream.len(),
            x.len()
        )));
    }
    let grad = match kind {
        Activation::Relu => x
            .iter()
            .zip(upstream)
            .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
            .collect(),
        Activation::Sigmoid => x
            .iter()
            .zip(upstream)
            .map(|(&v, &g)| {
                let s = sigmoid(v);
                g * s * (1.0 - s)
            })
            .collect(),
        Activation::Tanh => x
            .iter()
            .zip(upstream)
            .map(|(&v, &g)| {
                let t = v.tanh();
                g * (1.0 - t * t)
            })
            .collect(),
        Activation::Softmax => {
            let y = activation(Activation::Softmax, x);
            let dot: f64 = y.iter().zip(upstream).map(|(a, b)| a * b).sum();
            y.iter().zip(upstream).map(|(p, g)| p * (g - dot)).collect()
        }
    };
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let y = activation(Activation::Softmax, &[0.3; 8]);
        assert!(y.iter().all(|&p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn softmax_is_stable_for_huge_logits() {
        assert_eq!(activation(Activation::Softmax, &[1000.0, 1000.0]), vec![0.5, 0.5]);
        let y = activation(Activation::Softmax, &[-1000.0, 1000.0]);
        assert_eq!(y, vec![0.0, 1.0]);
    }

    #[test]
    fn fixed_points() {
        assert_eq!(activation(Activation::Sigmoid, &[0.0]), vec![0.5]);
        assert_eq!(activation(Activation::Tanh, &[0.0]), vec![0.0]);
        assert_eq!(activation(Activation::Relu, &[-2.0, 3.0]), vec![0.0, 3.0]);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn relu_adjoint_gates_by_sign() {
        let g = activation_backward(Activation::Relu, &[2.0, -1.0], &[0.7, 0.7]).unwrap();
        assert_eq!(g, vec![0.7, 0.0]);
    }

    #[test]
    fn adjoint_length_mismatch() {
        assert!(activation_backward(Activation::Tanh, &[1.0], &[1.0, 2.0]).is_err());
    }
}
