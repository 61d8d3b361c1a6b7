use super::{dot, logit, Hyperparams, ModelParams};
use crate::numerics::activation::sigmoid;

/// Full-batch gradient descent on the mean log loss. With `lasso` the penalty
/// is `l1 * |w|_1` handled by a soft-threshold (proximal) step; otherwise
/// `l2 / 2 * |w|^2` enters the gradient. The intercept is never penalised and
/// starts at the logit of the base rate; weights start at zero.
pub(super) fn logistic(z: &[Vec<f64>], y: &[bool], p: &Hyperparams, lasso: bool) -> ModelParams {
    let n = z.len() as f64;
    let d = z[0].len();
    let base = y.iter().filter(|&&v| v).count() as f64 / n;
    let mut w = vec![0.0; d];
    let mut b = logit(base);
    let mut grad = vec![0.0; d];
    for _ in 0..p.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (row, &label) in z.iter().zip(y) {
            let r = sigmoid(dot(&w, row) + b) - f64::from(u8::from(label));
            gb += r;
            for (g, x) in grad.iter_mut().zip(row) {
                *g += r * x;
            }
        }
        b -= p.step * gb / n;
        for (wj, g) in w.iter_mut().zip(&grad) {
            if lasso {
                let v = *wj - p.step * g / n;
                let t = p.step * p.l1;
                *wj = v.signum() * (v.abs() - t).max(0.0);
            } else {
                *wj -= p.step * (g / n + p.l2 * *wj);
            }
        }
    }
    ModelParams::Linear { weights: w, intercept: b }
}
