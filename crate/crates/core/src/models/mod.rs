//! Statistical models: OLS, logistic regression with selection, class
//! rebalancing, k-means and classifier scoring.

mod features;
pub mod kmeans;
pub mod logistic;
mod metrics;
mod ols;
mod report;
mod resample;
mod selection;

pub use features::{build_feature_matrix, FeatureMatrix, FeatureSpec, INTERCEPT};
pub use kmeans::{kmeans, kmeans_sweep, select_elbow, ElbowReport, KMeansOptions, KMeansResult};
pub use logistic::{fit_logistic, LogisticFit, LogisticOptions};
pub use metrics::{
    classification_metrics, roc_auc, ClassificationMetrics, ConfusionMatrix, RocCurve, RocPoint,
};
pub use ols::{fit_ols, t_critical, RegressionFit};
pub use report::{significance_stars, FitSummary, TermRow, STAR_NOTE};
pub use resample::{resample, ResampleMode};
pub use selection::{backward_stepwise_aic, pvalue_prune, StepRecord};
