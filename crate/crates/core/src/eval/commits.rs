use serde::{Deserialize, Serialize};

use super::baseline::{baseline_predict, BaselineSpec};
use super::report::{EvalConfig, EvalReport, FoldResult};
use super::EvalError;
use crate::features::{commit_features, developer_features, COMMIT_COLUMNS};
use crate::identity::Identity;
use crate::ingest::CommitRecord;
use crate::labels::{commit_labels, LabelSet};
use crate::ml::{ClassifierSpec, Dataset};
use crate::rng;

/// Settings of the per-commit experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitExperiment {
    /// Share of all commits the training developers must reach.
    pub coverage: f64,
    pub email_domains: Vec<String>,
    pub seed: u64,
}

/// Reports on every commit and on the commits of developers left out of
/// training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitReports {
    pub training_developers: Vec<String>,
    pub all: EvalReport,
    pub held_out: EvalReport,
}

/// Ids of the leading developers, ordered by commit count descending then
/// id, whose commits together reach `coverage` of the total.
pub fn training_prefix(counts: &[(String, usize)], coverage: f64) -> Vec<String> {
    let mut ordered: Vec<&(String, usize)> = counts.iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let total: usize = counts.iter().map(|c| c.1).sum();
    let target = coverage * total as f64;
    let mut cumulative = 0;
    let mut prefix = Vec::new();
    for (id, n) in ordered {
        if cumulative as f64 >= target && !prefix.is_empty() {
            break;
        }
        cumulative += n;
        prefix.push(id.clone());
    }
    prefix
}

struct DeveloperRows {
    id: String,
    shas: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<bool>,
    commits: Vec<CommitRecord>,
}

fn developer_rows(identity: &Identity, commits: &[&CommitRecord], labels: &LabelSet) -> Result<DeveloperRows, EvalError> {
    let mut sorted = commits.to_vec();
    sorted.sort_by(|a, b| a.timestamp_utc.cmp(&b.timestamp_utc).then_with(|| a.sha.cmp(&b.sha)));
    let aggregates = developer_features(sorted.iter().copied())?;
    let features = commit_features(sorted.iter().copied(), &aggregates);
    let statuses = commit_labels(identity, &sorted, labels)?;
    Ok(DeveloperRows {
        id: identity.id.clone(),
        shas: features.iter().map(|f| f.sha.clone()).collect(),
        rows: features.iter().map(|f| f.values()).collect(),
        labels: statuses.iter().map(|s| s.is_hired()).collect(),
        commits: sorted.into_iter().cloned().collect(),
    })
}

fn dataset(developers: &[&DeveloperRows]) -> Result<Dataset, EvalError> {
    Ok(Dataset::new(
        COMMIT_COLUMNS.map(String::from).to_vec(),
        developers.iter().flat_map(|d| d.rows.iter().cloned()).collect(),
        developers.iter().flat_map(|d| d.labels.iter().copied()).collect(),
        developers.iter().flat_map(|d| d.shas.iter().cloned()).collect(),
    )?)
}

/// Trains on the commits of the most active developers and scores every
/// commit and the commits of the remaining developers.
///
/// Unlabeled developers are left out. Besides the classifiers, three
/// per-commit rules are scored: `allpaid`, `email` (the commit's own
/// address) and `officehours` (the commit itself falls on a weekday
/// between 9:00 and 17:00).
pub fn per_commit_experiment(
    developers: &[(&Identity, Vec<&CommitRecord>)],
    labels: &LabelSet,
    classifiers: &[ClassifierSpec],
    config: &CommitExperiment,
) -> Result<CommitReports, EvalError> {
    if !(config.coverage > 0.0 && config.coverage <= 1.0) {
        return Err(EvalError::Input(format!("coverage {} outside (0, 1]", config.coverage)));
    }
    let rows: Vec<DeveloperRows> = developers
        .iter()
        .filter(|(identity, commits)| !commits.is_empty() && labels.key_for(identity).is_some())
        .map(|(identity, commits)| developer_rows(identity, commits, labels))
        .collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(EvalError::Input("no labeled developers".into()));
    }
    let counts: Vec<(String, usize)> = rows.iter().map(|d| (d.id.clone(), d.rows.len())).collect();
    let training_developers = training_prefix(&counts, config.coverage);
    let (train, rest): (Vec<&DeveloperRows>, Vec<&DeveloperRows>) =
        rows.iter().partition(|d| training_developers.contains(&d.id));
    let all: Vec<&DeveloperRows> = rows.iter().collect();

    let train_set = dataset(&train)?;
    if matches!(train_set.class_counts(), (0, _) | (_, 0)) {
        return Err(EvalError::SingleClass);
    }
    let all_set = dataset(&all)?;
    let rest_set = dataset(&rest)?;

    let mut all_results = Vec::new();
    let mut rest_results = Vec::new();
    for (i, spec) in classifiers.iter().enumerate() {
        let model = spec.fit(&train_set, rng::derive_seed(config.seed, &[i as u64]))?;
        for (set, out) in [(&all_set, &mut all_results), (&rest_set, &mut rest_results)] {
            let scores = model.predict_proba(&set.columns, &set.rows)?;
            out.push(FoldResult::score(spec.name(), 0, 0, &scores, &set.labels));
        }
    }

    let rules = [
        ("allpaid", BaselineSpec::AllHired),
        ("email", BaselineSpec::Email { domains: config.email_domains.clone() }),
        ("officehours", BaselineSpec::OfficeHours { threshold: 0.5 }),
    ];
    for (name, spec) in &rules {
        spec.validate()?;
        for (group, out) in [(&all, &mut all_results), (&rest, &mut rest_results)] {
            let (scores, truth): (Vec<f64>, Vec<bool>) = group
                .iter()
                .flat_map(|d| d.commits.iter().zip(&d.labels))
                .map(|(c, &y)| (if baseline_predict(spec, &[c]).1 { 1.0 } else { 0.0 }, y))
                .unzip();
            out.push(FoldResult::score(name, 0, 0, &scores, &truth));
        }
    }

    let echo = EvalConfig {
        seed: config.seed,
        folds: 1,
        repeats: 1,
        feature_mode: "commit".into(),
        coverage: Some(config.coverage),
    };
    Ok(CommitReports {
        training_developers,
        all: EvalReport::new(echo.clone(), all_results),
        held_out: EvalReport::new(echo, rest_results),
    })
}
