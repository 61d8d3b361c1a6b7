//! Binary classifiers over participant feature vectors. Every model
//! standardizes its inputs with statistics captured at fit time and reports
//! the probability of the positive (ASD) label.

mod gaussian;
mod linear;
mod mlp;
mod svm;
mod trees;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::activation::sigmoid;

pub use trees::TreeNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticRegression,
    LassoLogistic,
    Lda,
    Qda,
    SvmRbf,
    GradientBoostedTrees,
    Mlp2,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::LassoLogistic,
        ClassifierKind::Lda,
        ClassifierKind::Qda,
        ClassifierKind::SvmRbf,
        ClassifierKind::GradientBoostedTrees,
        ClassifierKind::Mlp2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::LassoLogistic => "lasso_logistic",
            ClassifierKind::Lda => "lda",
            ClassifierKind::Qda => "qda",
            ClassifierKind::SvmRbf => "svm_rbf",
            ClassifierKind::GradientBoostedTrees => "gradient_boosted_trees",
            ClassifierKind::Mlp2 => "mlp2",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .or(match norm.as_str() {
                "logistic" | "lr" => Some(ClassifierKind::LogisticRegression),
                "lasso" => Some(ClassifierKind::LassoLogistic),
                "svm" => Some(ClassifierKind::SvmRbf),
                "gbt" | "xgboost" => Some(ClassifierKind::GradientBoostedTrees),
                "mlp" => Some(ClassifierKind::Mlp2),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown classifier '{s}'")))
    }
}

/// Hyperparameters for every kind; each kind reads only its own fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub iterations: usize,
    pub step: f64,
    /// L2 strength for logistic regression.
    pub l2: f64,
    /// L1 strength for the lasso model.
    pub l1: f64,
    /// Ridge added to covariance diagonals (LDA/QDA).
    pub ridge: f64,
    pub svm_c: f64,
    /// RBF width; `None` means `1 / feature_count`.
    pub svm_gamma: Option<f64>,
    pub svm_tolerance: f64,
    pub trees: usize,
    pub tree_depth: usize,
    pub shrinkage: f64,
    /// Leaf-value L2 penalty for boosting.
    pub tree_lambda: f64,
    pub hidden: (usize, usize),
    pub mlp_epochs: usize,
    pub mlp_lr: f64,
    pub mlp_batch: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            iterations: 500,
            step: 0.1,
            l2: 1e-2,
            l1: 1e-2,
            ridge: 1e-6,
            svm_c: 1.0,
            svm_gamma: None,
            svm_tolerance: 1e-3,
            trees: 100,
            tree_depth: 3,
            shrinkage: 0.1,
            tree_lambda: 1.0,
            hidden: (32, 16),
            mlp_epochs: 200,
            mlp_lr: 0.05,
            mlp_batch: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub params: Hyperparams,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            params: Hyperparams::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let positive = [
            ("step", p.step),
            ("svm_c", p.svm_c),
            ("svm_tolerance", p.svm_tolerance),
            ("shrinkage", p.shrinkage),
            ("mlp_lr", p.mlp_lr),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("l2", p.l2), ("l1", p.l1), ("ridge", p.ridge), ("tree_lambda", p.tree_lambda)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative, got {v}")));
            }
        }
        if let Some(g) = p.svm_gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidArgument(format!("svm_gamma must be positive, got {g}")));
            }
        }
        if p.iterations == 0 || p.trees == 0 || p.tree_depth == 0 || p.mlp_epochs == 0 || p.mlp_batch == 0 {
            return Err(Error::InvalidArgument("iteration counts must be positive".into()));
        }
        if p.hidden.0 == 0 || p.hidden.1 == 0 {
            return Err(Error::InvalidArgument("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

/// Per-column z-scoring. Zero-variance columns are centred with divisor 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<(Self, Vec<Vec<f64>>)> {
        if x.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "standardization needs at least 2 rows, got {}",
                x.len()
            )));
        }
        let d = check_matrix(x)?;
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scale = vec![0.0; d];
        for row in x {
            for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scale {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        let stats = Self { mean, scale };
        let z = x.iter().map(|r| stats.apply(r)).collect::<Result<_>>()?;
        Ok((stats, z))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::Shape(format!(
                "feature vector has {} dims, model expects {}",
                x.len(),
                self.mean.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

fn check_matrix(x: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::Shape("feature matrix has no columns".into()));
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Shape(format!("row {i} has {} dims, expected {d}", row.len())));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("row {i} contains {v}")));
        }
    }
    Ok(d)
}

/// Learned parameters, in standardized feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Linear {
        weights: Vec<f64>,
        intercept: f64,
    },
    Quadratic {
        means: [Vec<f64>; 2],
        /// Row-major inverse covariances.
        precisions: [Vec<f64>; 2],
        log_dets: [f64; 2],
        log_priors: [f64; 2],
    },
    Kernel {
        support: Vec<Vec<f64>>,
        /// `alpha_i * y_i` per support vector.
        coefficients: Vec<f64>,
        bias: f64,
        gamma: f64,
    },
    Boosted {
        base_score: f64,
        shrinkage: f64,
        trees: Vec<Vec<TreeNode>>,
        /// Training log loss after each round.
        losses: Vec<f64>,
    },
    Network {
        /// `(weights out x in, bias)` per layer; ReLU between, sigmoid at the end.
        layers: Vec<(Vec<f64>, Vec<f64>)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub kind: ClassifierKind,
    pub standardizer: Standardizer,
    pub params: ModelParams,
}

impl FittedModel {
    /// Decision score before the logistic link.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let z = self.standardizer.apply(x)?;
        if let Some(v) = z.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("feature value {v}")));
        }
        Ok(match &self.params {
            ModelParams::Linear { weights, intercept } => dot(weights, &z) + intercept,
            ModelParams::Quadratic {
                means,
                precisions,
                log_dets,
                log_priors,
            } => {
                let g = |k: usize| {
                    gaussian::log_density(&z, &means[k], &precisions[k], log_dets[k]) + log_priors[k]
                };
                g(1) - g(0)
            }
            ModelParams::Kernel {
                support,
                coefficients,
                bias,
                gamma,
            } => svm::decision(support, coefficients, *bias, *gamma, &z),
            ModelParams::Boosted {
                base_score,
                shrinkage,
                trees,
                ..
            } => base_score + shrinkage * trees.iter().map(|t| trees::eval(t, &z)).sum::<f64>(),
            ModelParams::Network { layers } => mlp::logit(layers, &z)?,
        })
    }

    /// Linear models only: the weight vector mapped back to raw feature units.
    pub fn linear_direction(&self) -> Option<Vec<f64>> {
        match &self.params {
            ModelParams::Linear { weights, .. } => Some(
                weights
                    .iter()
                    .zip(&self.standardizer.scale)
                    .map(|(w, s)| w / s)
                    .collect(),
            ),
            _ => None,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Fits one classifier. Both labels must be present.
pub fn fit(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[bool]) -> Result<FittedModel> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} feature rows for {} labels", x.len(), y.len())));
    }
    check_matrix(x)?;
    let (standardizer, z) = Standardizer::fit(x)?;
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::DegenerateTraining(format!(
            "training set has a single label ({positives} of {} positive)",
            y.len()
        )));
    }
    let p = &spec.params;
    let params = match spec.kind {
        ClassifierKind::LogisticRegression => linear::logistic(&z, y, p, false),
        ClassifierKind::LassoLogistic => linear::logistic(&z, y, p, true),
        ClassifierKind::Lda => gaussian::lda(&z, y, p.ridge)?,
        ClassifierKind::Qda => gaussian::qda(&z, y, p.ridge)?,
        ClassifierKind::SvmRbf => svm::fit(&z, y, p)?,
        ClassifierKind::GradientBoostedTrees => trees::fit(&z, y, p),
        ClassifierKind::Mlp2 => mlp::fit(&z, y, p, spec.seed)?,
    };
    Ok(FittedModel {
        kind: spec.kind,
        standardizer,
        params,
    })
}

/// Probability of the positive label.
pub fn predict_proba(model: &FittedModel, x: &[f64]) -> Result<f64> {
    Ok(sigmoid(model.score(x)?))
}

/// Positive iff `p > threshold`.
pub fn decide(p: f64, threshold: f64) -> bool {
    p > threshold
}
