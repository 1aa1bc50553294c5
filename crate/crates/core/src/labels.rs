//! Ground-truth employment status.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identity::Identity;
use crate::ingest::CommitRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Hired,
    Volunteer,
}

impl Status {
    pub fn is_hired(self) -> bool {
        self == Status::Hired
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Hired => "hired",
            Status::Volunteer => "volunteer",
        })
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "hired" => Ok(Status::Hired),
            "volunteer" => Ok(Status::Volunteer),
            other => Err(format!("status must be hired or volunteer, got {other:?}")),
        }
    }
}

/// A closed interval of employment; open ends are unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HiredPeriod {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

impl HiredPeriod {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.from.is_none_or(|f| f <= date) && self.to.is_none_or(|t| date <= t)
    }

    fn overlaps(&self, other: &HiredPeriod) -> bool {
        let starts_before_other_ends = match (self.from, other.to) {
            (Some(a), Some(b)) => a <= b,
            _ => true,
        };
        let ends_after_other_starts = match (self.to, other.from) {
            (Some(a), Some(b)) => a >= b,
            _ => true,
        };
        starts_before_other_ends && ends_after_other_starts
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub entries: BTreeMap<String, Status>,
    pub periods: BTreeMap<String, Vec<HiredPeriod>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("labels line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("labels: overlapping hired periods for {identity:?}")]
    Overlap { identity: String },
    #[error("labels: conflicting status for {identity:?}")]
    ConflictingStatus { identity: String },
    #[error("identity {0:?} has no label")]
    Unlabeled(String),
}

fn parse_date(field: &str, line: usize) -> Result<Option<NaiveDate>, LabelError> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    NaiveDate::parse_from_str(field, "%Y-%m-%d")
        .map(Some)
        .map_err(|_| LabelError::Row { line, message: format!("malformed date {field:?}") })
}

/// Reads a labels CSV with header `identity,status,hired_from,hired_to`.
///
/// A row with either date set adds an employment period; several rows per
/// identity are allowed.
pub fn load_labels<R: Read>(input: R) -> Result<LabelSet, LabelError> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(input);
    let csv_err = |line: usize, e: csv::Error| LabelError::Row { line, message: e.to_string() };
    let headers = reader.headers().map_err(|e| csv_err(1, e))?;
    if headers.iter().collect::<Vec<_>>() != ["identity", "status", "hired_from", "hired_to"] {
        return Err(LabelError::Row {
            line: 1,
            message: "header must be identity,status,hired_from,hired_to".into(),
        });
    }
    let mut labels = LabelSet::default();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_err(line, e))?;
        let identity = record[0].trim().to_string();
        if identity.is_empty() {
            return Err(LabelError::Row { line, message: "empty identity".into() });
        }
        let status: Status = record[1].parse().map_err(|message| LabelError::Row { line, message })?;
        let from = parse_date(&record[2], line)?;
        let to = parse_date(&record[3], line)?;
        if let (Some(f), Some(t)) = (from, to) {
            if f > t {
                return Err(LabelError::Row { line, message: format!("hired_from {f} after hired_to {t}") });
            }
        }
        match labels.entries.get(&identity) {
            Some(&existing) if existing != status => return Err(LabelError::ConflictingStatus { identity }),
            _ => {
                labels.entries.insert(identity.clone(), status);
            }
        }
        if from.is_some() || to.is_some() {
            let period = HiredPeriod { from, to };
            let periods = labels.periods.entry(identity.clone()).or_default();
            if periods.iter().any(|p| p.overlaps(&period)) {
                return Err(LabelError::Overlap { identity });
            }
            periods.push(period);
        }
    }
    Ok(labels)
}

impl LabelSet {
    /// The label key matching an identity: its id, else any of its emails,
    /// else any of its names.
    pub fn key_for<'a>(&'a self, identity: &Identity) -> Option<&'a str> {
        std::iter::once(&identity.id)
            .chain(&identity.emails)
            .chain(&identity.names)
            .find_map(|k| self.entries.get_key_value(k.as_str()).map(|(k, _)| k.as_str()))
    }
}

/// Keeps identities with strictly more than `min_commits` commits.
pub fn study_filter(identities: &[Identity], min_commits: usize) -> Vec<Identity> {
    identities.iter().filter(|i| i.commit_count() > min_commits).cloned().collect()
}

/// Whether each commit (by local date) falls inside a hired period.
fn hired_flags(commits: &[&CommitRecord], periods: &[HiredPeriod]) -> Vec<bool> {
    commits
        .iter()
        .map(|c| {
            let date = c.local_time().date;
            periods.iter().any(|p| p.contains(date))
        })
        .collect()
}

/// Final status of a developer. With employment periods, the developer is
/// hired when at least half of their commits fall inside a period;
/// otherwise the recorded status applies.
pub fn resolve_mixed(identity: &Identity, commits: &[&CommitRecord], labels: &LabelSet) -> Result<Status, LabelError> {
    let key = labels.key_for(identity).ok_or_else(|| LabelError::Unlabeled(identity.id.clone()))?;
    match labels.periods.get(key) {
        Some(periods) if !commits.is_empty() => {
            let flags = hired_flags(commits, periods);
            let hired = flags.iter().filter(|&&h| h).count();
            Ok(if 2 * hired >= flags.len() { Status::Hired } else { Status::Volunteer })
        }
        _ => Ok(labels.entries[key]),
    }
}

/// Status of every commit, in the order given: from employment periods when
/// the developer has any, else the developer's status for all commits.
pub fn commit_labels(
    identity: &Identity,
    commits: &[&CommitRecord],
    labels: &LabelSet,
) -> Result<Vec<Status>, LabelError> {
    let key = labels.key_for(identity).ok_or_else(|| LabelError::Unlabeled(identity.id.clone()))?;
    Ok(match labels.periods.get(key) {
        Some(periods) => hired_flags(commits, periods)
            .into_iter()
            .map(|h| if h { Status::Hired } else { Status::Volunteer })
            .collect(),
        None => vec![labels.entries[key]; commits.len()],
    })
}

/// Counts of resolved statuses over a set of identities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LabelSummary {
    pub hired: usize,
    pub volunteer: usize,
    pub unlabeled: usize,
}

/// Resolves every identity; unlabeled ones are counted and left out.
pub fn resolve_all(
    groups: &[(&Identity, Vec<&CommitRecord>)],
    labels: &LabelSet,
) -> (BTreeMap<String, Status>, LabelSummary) {
    let mut resolved = BTreeMap::new();
    let mut summary = LabelSummary::default();
    for (identity, commits) in groups {
        match resolve_mixed(identity, commits, labels) {
            Ok(status) => {
                match status {
                    Status::Hired => summary.hired += 1,
                    Status::Volunteer => summary.volunteer += 1,
                }
                resolved.insert(identity.id.clone(), status);
            }
            Err(_) => summary.unlabeled += 1,
        }
    }
    (resolved, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn identity(id: &str, n: usize) -> Identity {
        Identity {
            id: id.into(),
            names: BTreeSet::new(),
            emails: [id.to_string()].into(),
            commit_shas: (0..n).map(|i| format!("{i:040x}")).collect(),
        }
    }

    fn commit_on(n: usize, date: &str) -> CommitRecord {
        let ts = NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap().and_hms_opt(12, 0, 0).unwrap();
        CommitRecord {
            sha: format!("{n:040x}"),
            author_name: "D".into(),
            author_email: "d@x".into(),
            timestamp_utc: ts.and_utc().timestamp(),
            tz_offset_minutes: 0,
            lines_added: 1,
            lines_deleted: 1,
            message: String::new(),
        }
    }

    #[test]
    fn loads_rows_and_periods() {
        let text = "identity,status,hired_from,hired_to\na@x.com,hired,2015-01-01,\nb@x.com,volunteer,,\n";
        let labels = load_labels(text.as_bytes()).unwrap();
        assert_eq!(labels.entries["a@x.com"], Status::Hired);
        assert_eq!(
            labels.periods["a@x.com"],
            [HiredPeriod { from: NaiveDate::from_ymd_opt(2015, 1, 1), to: None }]
        );
        assert!(!labels.periods.contains_key("b@x.com"));
        assert!(load_labels("identity,status,hired_from,hired_to\n".as_bytes()).unwrap().entries.is_empty());
    }

    #[test]
    fn rejects_bad_rows() {
        let h = "identity,status,hired_from,hired_to\n";
        let overlap = format!("{h}a,hired,2015-01-01,2015-06-01\na,hired,2015-05-01,\n");
        assert!(matches!(load_labels(overlap.as_bytes()), Err(LabelError::Overlap { .. })));
        assert!(load_labels(format!("{h}a,hired,2015-13-01,\n").as_bytes()).is_err());
        assert!(load_labels(format!("{h}a,contractor,,\n").as_bytes()).is_err());
        assert!(load_labels(format!("{h}a,hired,2016-01-01,2015-01-01\n").as_bytes()).is_err());
        assert!(load_labels(format!("{h}a,hired,,\na,volunteer,,\n").as_bytes()).is_err());
        assert!(load_labels("who,status\n".as_bytes()).is_err());
        let disjoint = format!("{h}a,hired,2015-01-01,2015-06-01\na,hired,2015-06-02,\n");
        assert_eq!(load_labels(disjoint.as_bytes()).unwrap().periods["a"].len(), 2);
    }

    #[test]
    fn study_filter_is_strict() {
        let ids = [identity("a", 100), identity("b", 101)];
        let kept: Vec<_> = study_filter(&ids, 100).into_iter().map(|i| i.id).collect();
        assert_eq!(kept, ["b"]);
        assert_eq!(study_filter(&[identity("c", 2)], 1).len(), 1);
    }

    fn mixed(hired_days: usize, total: usize) -> Status {
        // commits on consecutive days from 2016-01-01, hired from 2016-01-01
        let commits: Vec<CommitRecord> = (0..total)
            .map(|i| {
                let d = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap() + chrono::Days::new(i as u64);
                commit_on(i, &d.to_string())
            })
            .collect();
        let refs: Vec<&CommitRecord> = commits.iter().collect();
        let mut labels = LabelSet::default();
        labels.entries.insert("d@x".into(), Status::Hired);
        let periods = if hired_days == 0 {
            vec![HiredPeriod { from: NaiveDate::from_ymd_opt(2020, 1, 1), to: None }]
        } else {
            let end = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap() + chrono::Days::new(hired_days as u64 - 1);
            vec![HiredPeriod { from: NaiveDate::from_ymd_opt(2016, 1, 1), to: Some(end) }]
        };
        labels.periods.insert("d@x".into(), periods);
        let id = identity("d@x", total);
        let status = resolve_mixed(&id, &refs, &labels).unwrap();
        let per_commit = commit_labels(&id, &refs, &labels).unwrap();
        assert_eq!(per_commit.iter().filter(|s| s.is_hired()).count(), hired_days);
        let majority = 2 * hired_days >= total;
        assert_eq!(status.is_hired(), majority);
        status
    }

    #[test]
    fn mixed_status_resolution() {
        assert_eq!(mixed(8, 10), Status::Hired);
        assert_eq!(mixed(0, 10), Status::Volunteer);
        assert_eq!(mixed(5, 10), Status::Hired);
        assert_eq!(mixed(4, 10), Status::Volunteer);
    }

    #[test]
    fn direct_status_and_unlabeled() {
        let mut labels = LabelSet::default();
        labels.entries.insert("Dev Name".into(), Status::Volunteer);
        let mut id = identity("d@x", 1);
        let c = commit_on(0, "2016-01-01");
        assert!(matches!(resolve_mixed(&id, &[&c], &labels), Err(LabelError::Unlabeled(_))));
        assert!(commit_labels(&id, &[&c], &labels).is_err());
        id.names.insert("Dev Name".into());
        assert_eq!(resolve_mixed(&id, &[&c], &labels).unwrap(), Status::Volunteer);
        assert_eq!(commit_labels(&id, &[&c, &c], &labels).unwrap(), [Status::Volunteer; 2]);
    }

    #[test]
    fn summary_counts_sum() {
        let mut labels = LabelSet::default();
        labels.entries.insert("a".into(), Status::Hired);
        labels.entries.insert("b".into(), Status::Volunteer);
        let ids = [identity("a", 1), identity("b", 1), identity("c", 1)];
        let c = commit_on(0, "2016-01-01");
        let groups: Vec<_> = ids.iter().map(|i| (i, vec![&c])).collect();
        let (resolved, s) = resolve_all(&groups, &labels);
        assert_eq!(s, LabelSummary { hired: 1, volunteer: 1, unlabeled: 1 });
        assert_eq!(resolved.len(), 2);
    }

    proptest::proptest! {
        #[test]
        fn filter_is_monotone(counts in proptest::collection::vec(0usize..300, 0..30), k in 2usize..250) {
            let ids: Vec<_> = counts.iter().enumerate().map(|(i, &n)| identity(&i.to_string(), n)).collect();
            let strict: BTreeSet<_> = study_filter(&ids, k).into_iter().map(|i| i.id).collect();
            let loose: BTreeSet<_> = study_filter(&ids, k - 1).into_iter().map(|i| i.id).collect();
            proptest::prop_assert!(strict.is_subset(&loose));
        }
    }
}
