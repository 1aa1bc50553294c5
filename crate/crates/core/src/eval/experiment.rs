use std::collections::BTreeMap;

use super::baseline::{evaluate_baseline, BaselineSpec};
use super::folds::stratified_kfold;
use super::report::{cross_validate, EvalConfig, EvalReport};
use super::EvalError;
use crate::features::{FeatureMatrix, FeatureMode};
use crate::ingest::CommitRecord;
use crate::labels::Status;
use crate::ml::{ClassifierSpec, Dataset};

/// Settings of the developer-level experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DeveloperExperiment {
    pub seed: u64,
    pub folds: usize,
    pub repeats: usize,
    pub feature_mode: FeatureMode,
    pub classifiers: Vec<ClassifierSpec>,
    pub baselines: Vec<BaselineSpec>,
}

/// Joins a feature table with resolved statuses, keeping the labeled rows
/// and the columns of `mode`.
pub fn labeled_dataset(
    matrix: &FeatureMatrix,
    labels: &BTreeMap<String, Status>,
    mode: FeatureMode,
) -> Result<Dataset, EvalError> {
    let wanted = mode.columns();
    let positions: Vec<usize> = wanted
        .iter()
        .map(|c| {
            matrix
                .column_index(c)
                .ok_or_else(|| EvalError::Input(format!("feature table lacks column {c:?}")))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    let mut ids = Vec::new();
    for (id, row) in matrix.ids.iter().zip(&matrix.rows) {
        if let Some(status) = labels.get(id) {
            rows.push(positions.iter().map(|&j| row[j]).collect());
            truth.push(status.is_hired());
            ids.push(id.clone());
        }
    }
    Ok(Dataset::new(wanted.into_iter().map(String::from).collect(), rows, truth, ids)?)
}

/// Repeated stratified cross-validation of every classifier, plus the
/// baselines scored once on all labeled developers.
///
/// Baselines need commits; `commits` maps identity ids to them and may be
/// `None` when only a feature table is available, in which case baselines
/// are skipped.
pub fn evaluate_developers(
    data: &Dataset,
    commits: Option<&BTreeMap<String, Vec<&CommitRecord>>>,
    config: &DeveloperExperiment,
) -> Result<EvalReport, EvalError> {
    if matches!(data.class_counts(), (0, _) | (_, 0)) {
        return Err(EvalError::SingleClass);
    }
    let folds = stratified_kfold(&data.labels, config.folds, config.repeats, config.seed)?;
    let mut results = Vec::new();
    for spec in &config.classifiers {
        results.extend(cross_validate(data, spec, &folds, config.seed)?);
    }
    if let Some(commits) = commits {
        let developers: Vec<(&[&CommitRecord], bool)> = data
            .ids
            .iter()
            .zip(&data.labels)
            .map(|(id, &y)| (commits.get(id).map_or(&[][..], Vec::as_slice), y))
            .collect();
        for spec in &config.baselines {
            results.push(evaluate_baseline(spec, &developers)?);
        }
    }
    let echo = EvalConfig {
        seed: config.seed,
        folds: config.folds,
        repeats: config.repeats,
        feature_mode: config.feature_mode.to_string(),
        coverage: None,
    };
    Ok(EvalReport::new(echo, results))
}
