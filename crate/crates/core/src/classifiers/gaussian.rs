use nalgebra::{DMatrix, DVector};

use super::{dot, ModelParams};
use crate::error::{Error, Result};

struct ClassStats {
    count: usize,
    mean: Vec<f64>,
    /// Sum of centred outer products.
    scatter: DMatrix<f64>,
}

fn class_stats(z: &[Vec<f64>], y: &[bool], label: bool) -> ClassStats {
    let d = z[0].len();
    let rows: Vec<&Vec<f64>> = z.iter().zip(y).filter(|(_, &l)| l == label).map(|(r, _)| r).collect();
    let mut mean = vec![0.0; d];
    for r in &rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows.len() as f64);
    let mut scatter = DMatrix::zeros(d, d);
    for r in &rows {
        let c = DVector::from_iterator(d, r.iter().zip(&mean).map(|(v, m)| v - m));
        scatter += &c * c.transpose();
    }
    ClassStats {
        count: rows.len(),
        mean,
        scatter,
    }
}

fn inverse_and_log_det(mut cov: DMatrix<f64>, ridge: f64) -> Result<(DMatrix<f64>, f64)> {
    for i in 0..cov.nrows() {
        cov[(i, i)] += ridge;
    }
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok((chol.inverse(), log_det))
}

/// Shared-covariance Gaussian classes; the log-odds is linear.
pub(super) fn lda(z: &[Vec<f64>], y: &[bool], ridge: f64) -> Result<ModelParams> {
    let s0 = class_stats(z, y, false);
    let s1 = class_stats(z, y, true);
    let n = z.len();
    let pooled = (&s0.scatter + &s1.scatter) / (n.saturating_sub(2).max(1) as f64);
    let (precision, _) = inverse_and_log_det(pooled, ridge)?;
    let diff = DVector::from_iterator(s0.mean.len(), s1.mean.iter().zip(&s0.mean).map(|(a, b)| a - b));
    let w: Vec<f64> = (&precision * diff).iter().copied().collect();
    let mid: Vec<f64> = s1.mean.iter().zip(&s0.mean).map(|(a, b)| 0.5 * (a + b)).collect();
    let intercept = -dot(&w, &mid) + (s1.count as f64 / s0.count as f64).ln();
    Ok(ModelParams::Linear { weights: w, intercept })
}

/// Per-class Gaussian with its own covariance.
pub(super) fn qda(z: &[Vec<f64>], y: &[bool], ridge: f64) -> Result<ModelParams> {
    let n = z.len() as f64;
    let mut fitted = Vec::with_capacity(2);
    for label in [false, true] {
        let s = class_stats(z, y, label);
        let cov = s.scatter / (s.count.saturating_sub(1).max(1) as f64);
        let (precision, log_det) = inverse_and_log_det(cov, ridge)?;
        fitted.push((s.mean, precision.transpose().as_slice().to_vec(), log_det, (s.count as f64 / n).ln()));
    }
    let (m1, p1, d1, l1) = fitted.pop().expect("two classes");
    let (m0, p0, d0, l0) = fitted.pop().expect("two classes");
    Ok(ModelParams::Quadratic {
        means: [m0, m1],
        precisions: [p0, p1],
        log_dets: [d0, d1],
        log_priors: [l0, l1],
    })
}

/// Gaussian log density up to the shared `-d/2 log(2 pi)` term.
pub(super) fn log_density(x: &[f64], mean: &[f64], precision: &[f64], log_det: f64) -> f64 {
    let d = mean.len();
    let c: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let mut q = 0.0;
    for i in 0..d {
        q += c[i] * dot(&precision[i * d..(i + 1) * d], &c);
    }
    -0.5 * (log_det + q)
}
