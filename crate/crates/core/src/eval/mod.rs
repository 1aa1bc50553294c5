//! Evaluation: metrics, stratified cross-validation, heuristic baselines,
//! the per-commit experiment and a synthetic corpus generator.

mod baseline;
mod commits;
mod experiment;
mod folds;
mod metrics;
mod report;
mod synth;

use thiserror::Error;

pub use baseline::{baseline_predict, evaluate_baseline, is_office_hours, BaselineSpec, DEFAULT_EMAIL_DOMAINS};
pub use commits::{per_commit_experiment, training_prefix, CommitExperiment, CommitReports};
pub use experiment::{evaluate_developers, labeled_dataset, DeveloperExperiment};
pub use folds::{stratified_kfold, Folds};
pub use metrics::{precision_recall, roc_auc, Confusion};
pub use report::{cross_validate, Classifier, EvalConfig, EvalReport, FoldResult, MetricSummary, Summary};
pub use synth::{generate_synthetic_corpus, Profile, SynthCorpus, SynthSpec};

use crate::features::FeatureError;
use crate::labels::LabelError;
use crate::ml::MlError;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{0}")]
    Input(String),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("{k} folds requested but the minority class has {minority} samples")]
    TooManyFolds { k: usize, minority: usize },
    #[error("{classifier}, repeat {repeat}, fold {fold}: {source}")]
    Fold {
        classifier: String,
        repeat: usize,
        fold: usize,
        #[source]
        source: MlError,
    },
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Labels(#[from] LabelError),
}
