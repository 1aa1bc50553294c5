use serde::{Deserialize, Serialize};

use super::report::FoldResult;
use super::EvalError;
use crate::ingest::CommitRecord;

pub const DEFAULT_EMAIL_DOMAINS: [&str; 1] = ["mozilla.com"];

/// Rule-of-thumb classifiers that need no training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineSpec {
    /// Everybody is hired.
    AllHired,
    /// Hired with at least one commit from one of `domains`.
    Email { domains: Vec<String> },
    /// Hired when at least `threshold` of the commits are made on a weekday
    /// between 9:00 and 17:00 local time.
    OfficeHours { threshold: f64 },
}

impl BaselineSpec {
    pub fn email_default() -> BaselineSpec {
        BaselineSpec::Email { domains: DEFAULT_EMAIL_DOMAINS.map(String::from).to_vec() }
    }

    /// allhired, email, and office hours at 5%, 50% and 95%.
    pub fn presets(domains: &[String]) -> Vec<BaselineSpec> {
        let mut specs = vec![BaselineSpec::AllHired, BaselineSpec::Email { domains: domains.to_vec() }];
        specs.extend([0.05, 0.5, 0.95].map(|threshold| BaselineSpec::OfficeHours { threshold }));
        specs
    }

    /// `allhired`, `email`, `95%officehours`.
    pub fn name(&self) -> String {
        match self {
            BaselineSpec::AllHired => "allhired".into(),
            BaselineSpec::Email { .. } => "email".into(),
            BaselineSpec::OfficeHours { threshold } => {
                let percent = (threshold * 1e8).round() / 1e6;
                format!("{percent}%officehours")
            }
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        match self {
            BaselineSpec::OfficeHours { threshold } if !(*threshold > 0.0 && *threshold < 1.0) => {
                Err(EvalError::Input(format!("office-hours threshold {threshold} outside (0, 1)")))
            }
            BaselineSpec::Email { domains } if domains.is_empty() => {
                Err(EvalError::Input("email baseline needs at least one domain".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Weekday, local hour in `[9, 17)`.
pub fn is_office_hours(commit: &CommitRecord) -> bool {
    let t = commit.local_time();
    !t.is_weekend() && (9..17).contains(&t.hour)
}

fn has_domain(commit: &CommitRecord, domains: &[String]) -> bool {
    commit
        .author_email
        .rsplit_once('@')
        .is_some_and(|(_, d)| domains.iter().any(|allowed| allowed.eq_ignore_ascii_case(d)))
}

fn share(commits: &[&CommitRecord], pred: impl Fn(&CommitRecord) -> bool) -> f64 {
    if commits.is_empty() {
        return 0.0;
    }
    commits.iter().filter(|c| pred(c)).count() as f64 / commits.len() as f64
}

/// Score and prediction for one developer's commits.
///
/// The score is the share of matching commits (1 for allhired); the
/// prediction applies the rule.
pub fn baseline_predict(spec: &BaselineSpec, commits: &[&CommitRecord]) -> (f64, bool) {
    match spec {
        BaselineSpec::AllHired => (1.0, true),
        BaselineSpec::Email { domains } => {
            let s = share(commits, |c| has_domain(c, domains));
            (s, s > 0.0)
        }
        BaselineSpec::OfficeHours { threshold } => {
            let s = share(commits, is_office_hours);
            (s, s >= *threshold)
        }
    }
}

/// Scores a baseline on whole developers as a single cell.
///
/// AUC is computed from the binary predictions rather than the share
/// scores, so a rule that predicts everybody hired scores exactly like
/// allhired.
pub fn evaluate_baseline(spec: &BaselineSpec, developers: &[(&[&CommitRecord], bool)]) -> Result<FoldResult, EvalError> {
    spec.validate()?;
    let (scores, labels): (Vec<f64>, Vec<bool>) = developers
        .iter()
        .map(|(commits, label)| (if baseline_predict(spec, commits).1 { 1.0 } else { 0.0 }, *label))
        .unzip();
    Ok(FoldResult::score(&spec.name(), 0, 0, &scores, &labels))
}
