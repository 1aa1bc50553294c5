//! Classifiers: logistic regression, CART and random forest.
//!
//! Every model predicts the probability of the positive class (hired). A
//! [`TrainedModel`] carries the training column names and the per-column
//! medians used to fill in missing values, so predictions can be made on
//! tables whose columns come in any order.

mod forest;
mod logit;
mod tree;

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{fit_forest, ForestModel, ForestParams};
pub use logit::{fit_logit, fit_logit_traced, logit_gradient, logit_loss, LogitModel, LogitParams};
pub use tree::{best_split, fit_tree, gini, Node, Split, TreeModel, TreeParams};

use crate::features::median;

/// Magic first line of a model file.
pub const MODEL_MAGIC: &str = "PAYDEVMODEL/1";

#[derive(Debug, Error, PartialEq)]
pub enum MlError {
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("column mismatch: missing {missing:?}, extra {extra:?}")]
    ColumnMismatch { missing: Vec<String>, extra: Vec<String> },
    #[error("model file: {0}")]
    ModelFile(String),
}

/// Feature rows with binary labels (`true` = hired).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub ids: Vec<String>,
}

impl Dataset {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<bool>, ids: Vec<String>) -> Result<Self, MlError> {
        if rows.len() != labels.len() || rows.len() != ids.len() {
            return Err(MlError::InvalidData(format!(
                "{} rows, {} labels, {} ids",
                rows.len(),
                labels.len(),
                ids.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(MlError::InvalidData(format!("row {i} has {} values for {} columns", rows[i].len(), columns.len())));
        }
        if rows.iter().flatten().any(|v| v.is_infinite()) {
            return Err(MlError::InvalidData("infinite feature value".into()));
        }
        Ok(Self { columns, rows, labels, ids })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// (negatives, positives)
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l).count();
        (self.labels.len() - pos, pos)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    /// Checks the training preconditions: at least two rows, both classes.
    pub fn check_trainable(&self) -> Result<(), MlError> {
        if self.len() < 2 {
            return Err(MlError::InvalidData("need at least two rows".into()));
        }
        match self.class_counts() {
            (0, _) | (_, 0) => Err(MlError::SingleClass),
            _ => Ok(()),
        }
    }
}

/// Training-set medians per column; NaN cells are replaced by them.
fn column_medians(rows: &[Vec<f64>], p: usize) -> Vec<f64> {
    (0..p)
        .map(|j| {
            let mut present: Vec<f64> = rows.iter().map(|r| r[j]).filter(|v| !v.is_nan()).collect();
            median(&mut present).unwrap_or(0.0)
        })
        .collect()
}

fn impute(rows: &[Vec<f64>], medians: &[f64]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().zip(medians).map(|(&v, &m)| if v.is_nan() { m } else { v }).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Logit(LogitParams),
    Tree(TreeParams),
    Forest(ForestParams),
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Logit(_) => "logit",
            ClassifierSpec::Tree(_) => "rpart",
            ClassifierSpec::Forest(_) => "randomforest",
        }
    }

    /// Imputes missing values and fits; `seed` drives the forest's randomness.
    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<TrainedModel, MlError> {
        data.check_trainable()?;
        let imputation = column_medians(&data.rows, data.columns.len());
        let filled = Dataset { rows: impute(&data.rows, &imputation), ..data.clone() };
        let model = match self {
            ClassifierSpec::Logit(p) => ModelKind::Logit(fit_logit(&filled, p)?),
            ClassifierSpec::Tree(p) => ModelKind::Tree(fit_tree(&filled, p)?),
            ClassifierSpec::Forest(p) => ModelKind::Forest(fit_forest(&filled, p, seed)?),
        };
        Ok(TrainedModel { columns: data.columns.clone(), imputation, model })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Logit(LogitModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

/// A fitted classifier together with its input schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub columns: Vec<String>,
    pub imputation: Vec<f64>,
    pub model: ModelKind,
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self.model {
            ModelKind::Logit(_) => "logit",
            ModelKind::Tree(_) => "rpart",
            ModelKind::Forest(_) => "randomforest",
        }
    }

    /// Reorders `rows` (laid out as `columns`) into training order and fills
    /// missing values.
    fn align(&self, columns: &[String], rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, MlError> {
        let given: BTreeSet<&String> = columns.iter().collect();
        let expected: BTreeSet<&String> = self.columns.iter().collect();
        if given != expected || columns.len() != self.columns.len() {
            return Err(MlError::ColumnMismatch {
                missing: expected.difference(&given).map(|s| s.to_string()).collect(),
                extra: given.difference(&expected).map(|s| s.to_string()).collect(),
            });
        }
        let order: Vec<usize> = self
            .columns
            .iter()
            .map(|c| columns.iter().position(|g| g == c).expect("checked above"))
            .collect();
        rows.iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != columns.len() {
                    return Err(MlError::InvalidData(format!("row {i} has {} values", row.len())));
                }
                Ok(order
                    .iter()
                    .zip(&self.imputation)
                    .map(|(&j, &m)| if row[j].is_nan() { m } else { row[j] })
                    .collect())
            })
            .collect()
    }

    /// Probability of the hired class for every row.
    pub fn predict_proba(&self, columns: &[String], rows: &[Vec<f64>]) -> Result<Vec<f64>, MlError> {
        let rows = self.align(columns, rows)?;
        Ok(rows
            .iter()
            .map(|r| match &self.model {
                ModelKind::Logit(m) => m.predict_row(r),
                ModelKind::Tree(m) => m.predict_row(r),
                ModelKind::Forest(m) => m.predict_row(r),
            })
            .collect())
    }

    /// Hired iff the probability is at least 0.5.
    pub fn classify(&self, columns: &[String], rows: &[Vec<f64>]) -> Result<Vec<bool>, MlError> {
        Ok(self.predict_proba(columns, rows)?.into_iter().map(|p| p >= 0.5).collect())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), MlError> {
        let io = |e: std::io::Error| MlError::ModelFile(e.to_string());
        writeln!(out, "{MODEL_MAGIC}").map_err(io)?;
        serde_json::to_writer_pretty(&mut out, self).map_err(|e| MlError::ModelFile(e.to_string()))?;
        writeln!(out).map_err(io)
    }

    pub fn read<R: BufRead>(mut input: R) -> Result<TrainedModel, MlError> {
        let mut magic = String::new();
        input.read_line(&mut magic).map_err(|e| MlError::ModelFile(e.to_string()))?;
        if magic.trim_end() != MODEL_MAGIC {
            return Err(MlError::ModelFile(format!("expected {MODEL_MAGIC} header")));
        }
        let model: TrainedModel = serde_json::from_reader(input).map_err(|e| MlError::ModelFile(e.to_string()))?;
        if model.imputation.len() != model.columns.len() {
            return Err(MlError::ModelFile("imputation length does not match columns".into()));
        }
        Ok(model)
    }

    /// Human-readable summary: ranked standardized coefficients, the tree
    /// layout, or forest feature importances.
    pub fn introspect(&self) -> String {
        match &self.model {
            ModelKind::Logit(m) => {
                let mut out = format!("logit (standardized coefficients)\n{:<20} {:>10.4}\n", "(intercept)", m.intercept);
                for (name, coef) in m.ranked_coefficients(&self.columns) {
                    out.push_str(&format!("{name:<20} {coef:>10.4}\n"));
                }
                out
            }
            ModelKind::Tree(m) => m.render(&self.columns),
            ModelKind::Forest(m) => {
                let mut ranked: Vec<(&String, f64)> =
                    self.columns.iter().zip(m.gini_importance(self.columns.len())).collect();
                ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
                let mut out = format!("randomforest ({} trees, mtry {})\nmean decrease in Gini\n", m.trees.len(), m.mtry);
                for (name, value) in ranked {
                    out.push_str(&format!("{name:<20} {value:>10.4}\n"));
                }
                out
            }
        }
    }
}
