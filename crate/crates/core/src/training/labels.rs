use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{AU_COUNT, EXPR_COUNT};
use crate::model::Task;

/// Supervision for one image; `None` marks an unknown (UNK) value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskLabels {
    pub expr: Option<usize>,
    pub au: [Option<bool>; AU_COUNT],
    pub arousal: Option<f64>,
    pub valence: Option<f64>,
}

impl TaskLabels {
    pub fn new(
        expr: Option<usize>,
        au: [Option<bool>; AU_COUNT],
        arousal: Option<f64>,
        valence: Option<f64>,
    ) -> Result<Self> {
        let labels = Self {
            expr,
            au,
            arousal,
            valence,
        };
        labels.validate()?;
        Ok(labels)
    }

    pub fn unknown() -> Self {
        Self {
            expr: None,
            au: [None; AU_COUNT],
            arousal: None,
            valence: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.expr {
            if c >= EXPR_COUNT {
                return Err(Error::InvalidArgument(format!("expression label {c} >= {EXPR_COUNT}")));
            }
        }
        for (name, v) in [("arousal", self.arousal), ("valence", self.valence)] {
            if let Some(v) = v {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!("{name} target {v} outside [-1, 1]")));
                }
            }
        }
        if Task::ALL.iter().all(|&t| self.is_unknown(t)) {
            return Err(Error::InvalidArgument("every task label is UNK".into()));
        }
        Ok(())
    }

    /// True when the task carries no supervision (for AU: every unit UNK).
    pub fn is_unknown(&self, task: Task) -> bool {
        match task {
            Task::Expr => self.expr.is_none(),
            Task::Au => self.au.iter().all(Option::is_none),
            Task::Arousal => self.arousal.is_none(),
            Task::Valence => self.valence.is_none(),
        }
    }
}

/// Category counts over known labels only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub expr: [u64; EXPR_COUNT],
    pub au: [[u64; 2]; AU_COUNT],
}

impl LabelHistogram {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a TaskLabels>) -> Self {
        let mut h = Self::default();
        for l in labels {
            if let Some(c) = l.expr {
                h.expr[c] += 1;
            }
            for (counts, v) in h.au.iter_mut().zip(&l.au) {
                if let Some(v) = v {
                    counts[usize::from(*v)] += 1;
                }
            }
        }
        h
    }

    pub fn is_empty(&self) -> bool {
        self.expr.iter().all(|&c| c == 0) && self.au.iter().flatten().all(|&c| c == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub expr: Vec<f64>,
    /// `(weight for label 0, weight for label 1)` per action unit.
    pub au: Vec<[f64; 2]>,
}

impl ClassWeights {
    pub fn uniform() -> Self {
        Self {
            expr: vec![1.0; EXPR_COUNT],
            au: vec![[1.0, 1.0]; AU_COUNT],
        }
    }
}

/// `w_c = N / (C * max(n_c, 1))`; `None` when every count is zero.
pub fn inverse_frequency_weights(counts: &[u64]) -> Option<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let k = counts.len() as f64;
    Some(
        counts
            .iter()
            .map(|&n| total as f64 / (k * n.max(1) as f64))
            .collect(),
    )
}

/// Inverse class-probability weights per task. A task (or AU) with no known
/// labels keeps unit weights.
pub fn class_weights(histogram: &LabelHistogram) -> Result<ClassWeights> {
    if histogram.is_empty() {
        return Err(Error::InvalidArgument("label histogram is all zero".into()));
    }
    let expr = inverse_frequency_weights(&histogram.expr).unwrap_or_else(|| vec![1.0; EXPR_COUNT]);
    let au = histogram
        .au
        .iter()
        .map(|counts| match inverse_frequency_weights(counts) {
            Some(w) => [w[0], w[1]],
            None => [1.0, 1.0],
        })
        .collect();
    Ok(ClassWeights { expr, au })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_counts_give_unit_weights() {
        let h = LabelHistogram {
            expr: [5; EXPR_COUNT],
            ..Default::default()
        };
        let w = class_weights(&h).unwrap();
        assert!(w.expr.iter().all(|&v| v == 1.0));
        assert!(w.au.iter().all(|&p| p == [1.0, 1.0]));
    }

    #[test]
    fn binary_counts() {
        let w = inverse_frequency_weights(&[10, 30]).unwrap();
        assert_eq!(w[0], 2.0);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_histogram_is_an_error() {
        assert!(class_weights(&LabelHistogram::default()).is_err());
    }

    #[test]
    fn unk_labels_are_not_counted() {
        let mut au = [None; AU_COUNT];
        au[2] = Some(true);
        let a = TaskLabels::new(None, au, Some(0.1), None).unwrap();
        let b = TaskLabels::new(Some(3), [None; AU_COUNT], None, None).unwrap();
        let h = LabelHistogram::from_labels([&a, &b]);
        assert_eq!(h.expr.iter().sum::<u64>(), 1);
        assert_eq!(h.au[2], [0, 1]);
        assert_eq!(h.au.iter().flatten().sum::<u64>(), 1);
    }

    #[test]
    fn all_unknown_rejected() {
        assert!(TaskLabels::new(None, [None; AU_COUNT], None, None).is_err());
        assert!(TaskLabels::new(Some(8), [None; AU_COUNT], None, None).is_err());
        assert!(TaskLabels::new(None, [None; AU_COUNT], Some(1.2), None).is_err());
    }
}
