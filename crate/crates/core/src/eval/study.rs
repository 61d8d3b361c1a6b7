use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cohort::Cohort;
use super::metrics::{confusion_metrics, ClassificationMetrics};
use super::stats::{t_test, TTest};
use crate::classifiers::{decide, fit, predict_proba, ClassifierSpec, FittedModel};
use crate::error::{Error, Result};
use crate::features::{feature_names, Attribute, AROUSAL_COLUMN, AU_COLUMNS, EXPR_COLUMNS, FEATURE_DIM, VALENCE_COLUMN};

/// Sorted union of the feature indices of the given attributes.
pub fn attribute_mask(attributes: &[Attribute]) -> Result<Vec<usize>> {
    if attributes.is_empty() {
        return Err(Error::InvalidArgument("attribute set is empty".into()));
    }
    let mut idx: Vec<usize> = attributes.iter().flat_map(|a| a.feature_indices()).collect();
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

fn check_mask(mask: &[usize]) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument("feature mask is empty".into()));
    }
    if let Some(&bad) = mask.iter().find(|&&i| i >= FEATURE_DIM) {
        return Err(Error::InvalidArgument(format!("feature index {bad} >= {FEATURE_DIM}")));
    }
    Ok(())
}

fn masked(cohort: &Cohort, mask: &[usize]) -> Vec<Vec<f64>> {
    cohort
        .records()
        .iter()
        .map(|r| mask.iter().map(|&i| r.features.as_slice()[i]).collect())
        .collect()
}

/// Model trained on every record except `held_out`, or `None` when that
/// training set has a single label.
pub fn fit_fold(cohort: &Cohort, spec: &ClassifierSpec, mask: &[usize], held_out: usize) -> Result<Option<FittedModel>> {
    check_mask(mask)?;
    if held_out >= cohort.len() {
        return Err(Error::InvalidArgument(format!("fold {held_out} outside cohort of {}", cohort.len())));
    }
    let x = masked(cohort, mask);
    let y = cohort.labels();
    fit_excluding(spec, &x, &y, held_out)
}

fn fit_excluding(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[bool], held_out: usize) -> Result<Option<FittedModel>> {
    let tx: Vec<Vec<f64>> = x.iter().enumerate().filter(|&(i, _)| i != held_out).map(|(_, r)| r.clone()).collect();
    let ty: Vec<bool> = y.iter().enumerate().filter(|&(i, _)| i != held_out).map(|(_, &l)| l).collect();
    match fit(spec, &tx, &ty) {
        Ok(m) => Ok(Some(m)),
        Err(Error::DegenerateTraining(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub id: String,
    pub truth: bool,
    pub probability: f64,
    pub predicted: bool,
    /// The training set had one label; the prediction is its base rate.
    pub base_rate_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvReport {
    pub classifier: ClassifierSpec,
    pub mask: Vec<usize>,
    pub folds: Vec<FoldResult>,
    pub metrics: ClassificationMetrics,
    pub warnings: Vec<String>,
}

impl LoocvReport {
    pub fn predictions(&self) -> Vec<bool> {
        self.folds.iter().map(|f| f.predicted).collect()
    }
}

/// One fit per participant; folds run in parallel and are reported in id order.
pub fn loocv(cohort: &Cohort, spec: &ClassifierSpec, mask: &[usize]) -> Result<LoocvReport> {
    cohort.validate_for_evaluation()?;
    check_mask(mask)?;
    spec.validate()?;
    let x = masked(cohort, mask);
    let y = cohort.labels();
    let folds: Vec<FoldResult> = (0..cohort.len())
        .into_par_iter()
        .map(|i| -> Result<FoldResult> {
            let (probability, fallback) = match fit_excluding(spec, &x, &y, i)? {
                Some(model) => (predict_proba(&model, &x[i])?, false),
                None => {
                    let pos = y.iter().enumerate().filter(|&(j, &l)| j != i && l).count();
                    (pos as f64 / (y.len() - 1) as f64, true)
                }
            };
            Ok(FoldResult {
                id: cohort.records()[i].id.clone(),
                truth: y[i],
                probability,
                predicted: decide(probability, 0.5),
                base_rate_fallback: fallback,
            })
        })
        .collect::<Result<_>>()?;
    let warnings = folds
        .iter()
        .filter(|f| f.base_rate_fallback)
        .map(|f| format!("fold '{}': single-label training set, predicted base rate", f.id))
        .collect();
    let preds: Vec<bool> = folds.iter().map(|f| f.predicted).collect();
    Ok(LoocvReport {
        classifier: spec.clone(),
        mask: mask.to_vec(),
        metrics: confusion_metrics(&preds, &y)?,
        folds,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub attributes: Vec<Attribute>,
    pub metrics: ClassificationMetrics,
}

/// AU, AU+Aro, AU+Aro+Val, and all four.
pub fn default_ablation_subsets() -> Vec<Vec<Attribute>> {
    use Attribute::*;
    vec![
        vec![Au],
        vec![Au, Arousal],
        vec![Au, Arousal, Valence],
        vec![Au, Arousal, Valence, Expr],
    ]
}

pub fn ablation_study(cohort: &Cohort, spec: &ClassifierSpec, subsets: &[Vec<Attribute>]) -> Result<Vec<AblationRow>> {
    subsets
        .par_iter()
        .map(|attrs| {
            let report = loocv(cohort, spec, &attribute_mask(attrs)?)?;
            Ok(AblationRow {
                attributes: attrs.clone(),
                metrics: report.metrics,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeTest {
    pub attribute: Attribute,
    /// Which participant-level scalar was compared.
    pub summary: String,
    pub asd_mean: f64,
    pub non_asd_mean: f64,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTest {
    pub index: usize,
    pub name: String,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub attributes: Vec<AttributeTest>,
    pub per_feature: Vec<FeatureTest>,
}

impl SignificanceReport {
    pub fn attribute(&self, attribute: Attribute) -> Option<&AttributeTest> {
        self.attributes.iter().find(|a| a.attribute == attribute)
    }

    /// Median per-feature p-value over the attribute's feature indices.
    pub fn median_feature_p(&self, attribute: Attribute) -> f64 {
        let idx = attribute.feature_indices();
        let mut ps: Vec<f64> = self
            .per_feature
            .iter()
            .filter(|f| idx.contains(&f.index))
            .map(|f| f.test.p)
            .collect();
        ps.sort_by(f64::total_cmp);
        let n = ps.len();
        if n % 2 == 1 {
            ps[n / 2]
        } else {
            0.5 * (ps[n / 2 - 1] + ps[n / 2])
        }
    }
}

/// Participant-level scalar per attribute. The expression probabilities sum
/// to one in every frame, so their plain average is constant; the neutral
/// category's mean is used instead.
fn summary(attribute: Attribute, mean: &[f64]) -> (f64, &'static str) {
    match attribute {
        Attribute::Au => (
            mean[AU_COLUMNS].iter().sum::<f64>() / AU_COLUMNS.len() as f64,
            "average of the AU mean slice",
        ),
        Attribute::Expr => (mean[EXPR_COLUMNS.start], "mean of the neutral expression probability"),
        Attribute::Arousal => (mean[AROUSAL_COLUMN], "mean arousal"),
        Attribute::Valence => (mean[VALENCE_COLUMN], "mean valence"),
    }
}

/// ASD versus non-ASD t-tests on one scalar per attribute and on every feature.
pub fn attribute_significance(cohort: &Cohort) -> Result<SignificanceReport> {
    let (asd, non) = cohort.group_counts();
    if asd < 2 || non < 2 {
        return Err(Error::InvalidArgument(format!(
            "each group needs at least 2 participants (has {asd} ASD, {non} non-ASD)"
        )));
    }
    let split = |f: &dyn Fn(&[f64]) -> f64| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for r in cohort.records() {
            let v = f(r.features.as_slice());
            if r.diagnosis.is_positive() {
                a.push(v);
            } else {
                b.push(v);
            }
        }
        (a, b)
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut attributes = Vec::with_capacity(4);
    for attribute in Attribute::ALL {
        let (a, b) = split(&|x| summary(attribute, x).0);
        attributes.push(AttributeTest {
            attribute,
            summary: summary(attribute, &[0.0; FEATURE_DIM]).1.to_string(),
            asd_mean: mean(&a),
            non_asd_mean: mean(&b),
            test: t_test(&a, &b)?,
        });
    }
    let names = feature_names();
    let per_feature = (0..FEATURE_DIM)
        .map(|i| {
            let (a, b) = split(&|x| x[i]);
            Ok(FeatureTest {
                index: i,
                name: names[i].clone(),
                test: t_test(&a, &b)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SignificanceReport {
        attributes,
        per_feature,
    })
}
