use super::ensure_finite;
use crate::error::{Error, Result};

fn check(x: &[f64], weights: &[f64], bias: &[f64]) -> Result<()> {
    if bias.is_empty() || weights.len() != bias.len() * x.len() {
        return Err(Error::Shape(format!(
            "linear: weights {} != out {} x in {}",
            weights.len(),
            bias.len(),
            x.len()
        )));
    }
    Ok(())
}

/// `y = W x + b` with `W` stored row-major as `out x in`; `out = bias.len()`.
pub fn linear(x: &[f64], weights: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    check(x, weights, bias)?;
    ensure_finite(x, "linear input")?;
    Ok(weights
        .chunks_exact(x.len())
        .zip(bias)
        .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub input: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Adjoint of [`linear`]: `dx = W^T g`, `dW = g x^T`, `db = g`.
pub fn linear_backward(x: &[f64], weights: &[f64], upstream: &[f64]) -> Result<LinearGrads> {
    check(x, weights, upstream)?;
    let mut input = vec![0.0; x.len()];
    let mut gw = Vec::with_capacity(weights.len());
    for (row, g) in weights.chunks_exact(x.len()).zip(upstream) {
        for ((dx, w), v) in input.iter_mut().zip(row).zip(x) {
            *dx += w * g;
            gw.push(g * v);
        }
    }
    Ok(LinearGrads {
        input,
        weights: gw,
        bias: upstream.to_vec(),
    })
}
