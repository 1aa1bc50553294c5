use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::Folds;
use super::metrics::{roc_auc, Confusion};
use super::EvalError;
use crate::ml::{ClassifierSpec, Dataset, MlError};
use crate::rng;

/// Anything that can be trained on a fold and score held-out rows.
pub trait Classifier: Sync {
    fn name(&self) -> String;

    /// Probabilities of the hired class for `test_rows`.
    fn fit_predict(&self, train: &Dataset, test_rows: &[Vec<f64>], seed: u64) -> Result<Vec<f64>, MlError>;
}

impl Classifier for ClassifierSpec {
    fn name(&self) -> String {
        ClassifierSpec::name(self).to_string()
    }

    fn fit_predict(&self, train: &Dataset, test_rows: &[Vec<f64>], seed: u64) -> Result<Vec<f64>, MlError> {
        self.fit(train, seed)?.predict_proba(&train.columns, test_rows)
    }
}

/// Scores of one (classifier, repeat, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub classifier: String,
    pub repeat: usize,
    pub fold: usize,
    pub auc: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl FoldResult {
    /// Scores `scores` against `labels`, predicting hired at `score >= 0.5`.
    /// AUC is NA when the labels hold a single class.
    pub fn score(classifier: &str, repeat: usize, fold: usize, scores: &[f64], labels: &[bool]) -> FoldResult {
        let predictions: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
        let c = Confusion::from_predictions(&predictions, labels);
        FoldResult {
            classifier: classifier.to_string(),
            repeat,
            fold,
            auc: roc_auc(scores, labels).ok(),
            precision: c.precision(),
            recall: c.recall(),
            tp: c.tp,
            fp: c.fp,
            tn: c.tn,
            fn_: c.fn_,
        }
    }
}

/// Mean and sample standard deviation of a metric over the cells where it is
/// defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub defined: usize,
}

impl MetricSummary {
    fn of(values: impl Iterator<Item = Option<f64>>) -> MetricSummary {
        let present: Vec<f64> = values.flatten().collect();
        let n = present.len();
        if n == 0 {
            return MetricSummary { mean: None, sd: None, defined: 0 };
        }
        let mean = present.iter().sum::<f64>() / n as f64;
        let sd = (n > 1).then(|| (present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        MetricSummary { mean: Some(mean), sd, defined: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub classifier: String,
    pub cells: usize,
    pub auc: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
}

/// What an evaluation ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub seed: u64,
    pub folds: usize,
    pub repeats: usize,
    pub feature_mode: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub results: Vec<FoldResult>,
    pub summary: Vec<Summary>,
}

impl EvalReport {
    /// Summaries are unweighted means over each classifier's cells, listed
    /// in order of first appearance.
    pub fn new(config: EvalConfig, results: Vec<FoldResult>) -> EvalReport {
        let mut names: Vec<&str> = Vec::new();
        for r in &results {
            if !names.contains(&r.classifier.as_str()) {
                names.push(&r.classifier);
            }
        }
        let summary = names
            .iter()
            .map(|&name| {
                let cells: Vec<&FoldResult> = results.iter().filter(|r| r.classifier == name).collect();
                Summary {
                    classifier: name.to_string(),
                    cells: cells.len(),
                    auc: MetricSummary::of(cells.iter().map(|c| c.auc)),
                    precision: MetricSummary::of(cells.iter().map(|c| c.precision)),
                    recall: MetricSummary::of(cells.iter().map(|c| c.recall)),
                }
            })
            .collect();
        EvalReport { config, results, summary }
    }

    pub fn summary_for(&self, classifier: &str) -> Option<&Summary> {
        self.summary.iter().find(|s| s.classifier == classifier)
    }

    /// Aligned text table of the summaries.
    pub fn render_table(&self) -> String {
        let fmt = |m: &MetricSummary| match (m.mean, m.sd) {
            (Some(mean), Some(sd)) => format!("{mean:.3} ± {sd:.3}"),
            (Some(mean), None) => format!("{mean:.3}"),
            _ => "NA".to_string(),
        };
        let rows: Vec<[String; 5]> = self
            .summary
            .iter()
            .map(|s| [s.classifier.clone(), fmt(&s.auc), fmt(&s.precision), fmt(&s.recall), s.cells.to_string()])
            .collect();
        let header = ["classifier", "ROC AUC", "precision", "recall", "cells"].map(String::from);
        let mut widths = header.clone().map(|h| h.chars().count());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |row: &[String; 5]| {
            let mut out = format!("{:<w$}", row[0], w = widths[0]);
            for (cell, w) in row.iter().zip(widths).skip(1) {
                let pad = w - cell.chars().count();
                out.push_str("  ");
                out.push_str(&" ".repeat(pad));
                out.push_str(cell);
            }
            out.push('\n');
            out
        };
        let mut out = line(&header);
        for row in &rows {
            out.push_str(&line(row));
        }
        out
    }
}

/// Trains on every fold's complement and scores the held-out fold.
///
/// Cells are evaluated in parallel; cell `(repeat, fold)` receives the seed
/// derived from `(seed, repeat, fold)`, so results match a sequential run.
pub fn cross_validate(
    data: &Dataset,
    classifier: &dyn Classifier,
    folds: &Folds,
    seed: u64,
) -> Result<Vec<FoldResult>, EvalError> {
    if folds.assignments.iter().any(|a| a.len() != data.len()) {
        return Err(EvalError::Input("fold assignment does not match the dataset".into()));
    }
    let name = classifier.name();
    let cells: Vec<(usize, usize)> =
        (0..folds.repeats()).flat_map(|r| (0..folds.k).map(move |f| (r, f))).collect();
    cells
        .par_iter()
        .map(|&(repeat, fold)| {
            let (train, test) = folds.split(repeat, fold);
            let train_set = data.subset(&train);
            let test_rows: Vec<Vec<f64>> = test.iter().map(|&i| data.rows[i].clone()).collect();
            let test_labels: Vec<bool> = test.iter().map(|&i| data.labels[i]).collect();
            let cell_seed = rng::derive_seed(seed, &[repeat as u64, fold as u64]);
            let scores = classifier
                .fit_predict(&train_set, &test_rows, cell_seed)
                .map_err(|source| EvalError::Fold { classifier: name.clone(), repeat, fold, source })?;
            Ok(FoldResult::score(&name, repeat, fold, &scores, &test_labels))
        })
        .collect()
}
