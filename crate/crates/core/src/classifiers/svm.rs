use super::{Hyperparams, ModelParams};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100_000;

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub(super) fn decision(support: &[Vec<f64>], coefficients: &[f64], bias: f64, gamma: f64, x: &[f64]) -> f64 {
    support
        .iter()
        .zip(coefficients)
        .map(|(s, c)| c * rbf(s, x, gamma))
        .sum::<f64>()
        + bias
}

/// C-SVM dual solved by SMO, choosing the maximal violating pair each step.
pub(super) fn fit(z: &[Vec<f64>], labels: &[bool], p: &Hyperparams) -> Result<ModelParams> {
    let n = z.len();
    let gamma = p.svm_gamma.unwrap_or(1.0 / z[0].len() as f64);
    let c = p.svm_c;
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(&z[i], &z[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt < 0.0 && a < c) || (yt > 0.0 && a > 0.0);

    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        let (mut m_up, mut m_low) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > m_up {
                m_up = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < m_low {
                m_low = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m_up - m_low < p.svm_tolerance {
            converged = true;
            break;
        }
        let eta = (k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j]).max(1e-12);
        let mut delta = (m_up - m_low) / eta;
        delta = delta.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        delta = delta.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        alpha[i] += y[i] * delta;
        alpha[j] -= y[j] * delta;
        for t in 0..n {
            grad[t] += y[t] * delta * (k[t * n + i] - k[t * n + j]);
        }
    }
    if !converged {
        return Err(Error::Numeric("SMO did not converge".into()));
    }

    let free: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0 && alpha[t] < c).collect();
    let bias = if free.is_empty() {
        let (mut m_up, mut m_low) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) {
                m_up = m_up.max(v);
            }
            if low(alpha[t], y[t]) {
                m_low = m_low.min(v);
            }
        }
        0.5 * (m_up + m_low)
    } else {
        free.iter().map(|&t| -y[t] * grad[t]).sum::<f64>() / free.len() as f64
    };

    let (support, coefficients) = (0..n)
        .filter(|&t| alpha[t] > 0.0)
        .map(|t| (z[t].clone(), alpha[t] * y[t]))
        .unzip();
    Ok(ModelParams::Kernel {
        support,
        coefficients,
        bias,
        gamma,
    })
}
