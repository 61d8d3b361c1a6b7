use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// The same outcomes with the roles of the two labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
        }
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn f1(&self) -> Option<f64> {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Metrics whose denominator is zero are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub counts: ConfusionCounts,
    pub f1: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

impl From<ConfusionCounts> for ClassificationMetrics {
    fn from(counts: ConfusionCounts) -> Self {
        Self {
            counts,
            f1: counts.f1(),
            sensitivity: counts.sensitivity(),
            specificity: counts.specificity(),
        }
    }
}

pub fn confusion_metrics(predictions: &[bool], labels: &[bool]) -> Result<ClassificationMetrics> {
    if predictions.len() != labels.len() || labels.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(labels) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (false, true) => c.fn_ += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c.into())
}

/// Macro F1 over the categories present in predictions or targets.
pub fn expr_macro_f1(predictions: &[usize], targets: &[usize]) -> Result<f64> {
    if predictions.len() != targets.len() || targets.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    let classes = predictions.iter().chain(targets).copied().max().unwrap_or(0) + 1;
    let mut counts = vec![ConfusionCounts::default(); classes];
    for (&p, &t) in predictions.iter().zip(targets) {
        if p == t {
            counts[p].tp += 1;
        } else {
            counts[p].fp += 1;
            counts[t].fn_ += 1;
        }
    }
    let present: Vec<f64> = counts.iter().filter_map(ConfusionCounts::f1).collect();
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

/// Mean over units of `(F1 + accuracy) / 2`, probabilities binarized with
/// `p > 0.5`. A unit with no positives in either input has F1 = 1.
pub fn au_mean_f1_acc(probabilities: &[Vec<f64>], targets: &[Vec<bool>]) -> Result<f64> {
    if probabilities.len() != targets.len() || targets.is_empty() {
        return Err(Error::Shape(format!(
            "{} prediction rows for {} target rows",
            probabilities.len(),
            targets.len()
        )));
    }
    let units = targets[0].len();
    if units == 0 || probabilities.iter().any(|r| r.len() != units) || targets.iter().any(|r| r.len() != units) {
        return Err(Error::Shape("AU rows have inconsistent widths".into()));
    }
    let mut total = 0.0;
    for u in 0..units {
        let preds: Vec<bool> = probabilities.iter().map(|r| r[u] > 0.5).collect();
        let truth: Vec<bool> = targets.iter().map(|r| r[u]).collect();
        let c = confusion_metrics(&preds, &truth)?.counts;
        let f1 = c.f1().unwrap_or(1.0);
        total += 0.5 * (f1 + c.accuracy().expect("non-empty"));
    }
    Ok(total / units as f64)
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Shape(format!("pearson needs equal lengths >= 2, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numeric("pearson correlation of a zero-variance series".into()));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_cohort_counts() {
        let c = ConfusionCounts { tp: 38, fn_: 11, fp: 12, tn: 27 };
        assert!((c.sensitivity().unwrap() - 38.0 / 49.0).abs() < 1e-15);
        assert!((c.specificity().unwrap() - 27.0 / 39.0).abs() < 1e-15);
        assert!((c.f1().unwrap() - 76.0 / 99.0).abs() < 1e-15);
    }

    #[test]
    fn undefined_ratios_are_absent() {
        let m = confusion_metrics(&[false, false], &[false, false]).unwrap();
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.specificity, Some(1.0));
    }

    #[test]
    fn pearson_signs() {
        let x = [1.0, 2.0, 4.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&x, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn perfect_au_predictions() {
        let t = vec![vec![true, false], vec![false, false]];
        let p = vec![vec![0.9, 0.1], vec![0.2, 0.3]];
        assert_eq!(au_mean_f1_acc(&p, &t).unwrap(), 1.0);
    }
}
