//! Leave-one-out evaluation, classification and recognition metrics,
//! attribute ablations and two-sample t-tests.

mod cohort;
mod metrics;
mod stats;
mod study;

pub use cohort::{Cohort, Diagnosis, StudyRecord};
pub use metrics::{
    au_mean_f1_acc, confusion_metrics, expr_macro_f1, pearson, ClassificationMetrics, ConfusionCounts,
};
pub use stats::{ln_gamma, regularized_incomplete_beta, t_test, TTest};
pub use study::{
    ablation_study, attribute_mask, attribute_significance, default_ablation_subsets, fit_fold, loocv,
    AblationRow, AttributeTest, FeatureTest, FoldResult, LoocvReport, SignificanceReport,
};
