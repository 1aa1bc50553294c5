//! Per-developer activity metrics and per-commit feature vectors.
//!
//! All time-of-day and day-of-week metrics use the author's local time, i.e.
//! the UTC timestamp shifted by the offset recorded with each commit. Hour
//! buckets are half-open: night `[0,6)`, morning `[6,12)`, afternoon
//! `[12,18)`, evening `[18,24)` and office `[8,17)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::identity::Identity;
use crate::ingest::{CommitRecord, LocalTime};

/// Column order of the developer metrics.
pub const FEATURE_COLUMNS: [&str; 16] = [
    "period",
    "days",
    "weeks",
    "timediff",
    "commits",
    "loc_per_commit",
    "weekend",
    "night",
    "morning",
    "afternoon",
    "evening",
    "office",
    "most_active_hour",
    "beginning_regular",
    "length_regular",
    "end_regular",
];

/// Activity-volume metrics dropped by [`FeatureMode::NoVolume`].
pub const VOLUME_COLUMNS: [&str; 4] = ["commits", "days", "weeks", "period"];

const INTEGER_COLUMNS: [&str; 8] = [
    "period",
    "days",
    "weeks",
    "commits",
    "most_active_hour",
    "beginning_regular",
    "length_regular",
    "end_regular",
];

pub const COMMIT_COLUMNS: [&str; 15] = [
    "weekend",
    "hour",
    "night",
    "morning",
    "afternoon",
    "evening",
    "office",
    "loc",
    "time_since_prev",
    "author_weekend",
    "author_night",
    "author_morning",
    "author_afternoon",
    "author_evening",
    "author_office",
];

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    All,
    NoVolume,
}

impl FeatureMode {
    pub fn columns(self) -> Vec<&'static str> {
        FEATURE_COLUMNS
            .iter()
            .copied()
            .filter(|c| self == FeatureMode::All || !VOLUME_COLUMNS.contains(c))
            .collect()
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::All => "all",
            FeatureMode::NoVolume => "no_volume",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(FeatureMode::All),
            "no_volume" => Ok(FeatureMode::NoVolume),
            other => Err(format!("unknown feature mode {other:?} (expected all or no_volume)")),
        }
    }
}

/// The 16 activity metrics of one developer.
#[derive(Debug, Clone, PartialEq)]
pub struct DeveloperFeatures {
    /// Calendar days between the first and last local commit dates.
    pub period: i64,
    /// Distinct local dates with a commit.
    pub days: usize,
    /// Distinct ISO weeks with a commit.
    pub weeks: usize,
    /// Median gap between successive commits, in days (0 with one commit).
    pub timediff: f64,
    pub commits: usize,
    /// Median of added + deleted lines; NaN when no commit has known counts.
    pub loc_per_commit: f64,
    pub weekend: f64,
    pub night: f64,
    pub morning: f64,
    pub afternoon: f64,
    pub evening: f64,
    pub office: f64,
    pub most_active_hour: u32,
    pub beginning_regular: u32,
    pub length_regular: u32,
    pub end_regular: u32,
}

impl DeveloperFeatures {
    pub fn get(&self, column: &str) -> Option<f64> {
        Some(match column {
            "period" => self.period as f64,
            "days" => self.days as f64,
            "weeks" => self.weeks as f64,
            "timediff" => self.timediff,
            "commits" => self.commits as f64,
            "loc_per_commit" => self.loc_per_commit,
            "weekend" => self.weekend,
            "night" => self.night,
            "morning" => self.morning,
            "afternoon" => self.afternoon,
            "evening" => self.evening,
            "office" => self.office,
            "most_active_hour" => f64::from(self.most_active_hour),
            "beginning_regular" => f64::from(self.beginning_regular),
            "length_regular" => f64::from(self.length_regular),
            "end_regular" => f64::from(self.end_regular),
            _ => return None,
        })
    }

    pub fn values(&self, mode: FeatureMode) -> Vec<f64> {
        mode.columns().into_iter().map(|c| self.get(c).expect("known column")).collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("identity {0:?} has no commits")]
    NoCommits(String),
    #[error("features CSV: {0}")]
    Csv(String),
}

/// Median; even lengths average the two middle values. NaNs must be absent.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len().is_multiple_of(2) { (values[mid - 1] + values[mid]) / 2.0 } else { values[mid] })
}

/// Nearest-rank percentile of a sorted slice, `pct` in 1..=100.
fn nearest_rank(sorted: &[u32], pct: usize) -> u32 {
    let rank = (pct * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

#[derive(Clone, Copy)]
enum DayPart {
    Night,
    Morning,
    Afternoon,
    Evening,
}

fn day_part(hour: u32) -> DayPart {
    match hour {
        0..=5 => DayPart::Night,
        6..=11 => DayPart::Morning,
        12..=17 => DayPart::Afternoon,
        _ => DayPart::Evening,
    }
}

fn is_office(hour: u32) -> bool {
    (8..17).contains(&hour)
}

fn sorted_commits<'a, I>(commits: I) -> Vec<&'a CommitRecord>
where
    I: IntoIterator<Item = &'a CommitRecord>,
{
    let mut sorted: Vec<&CommitRecord> = commits.into_iter().collect();
    sorted.sort_by(|a, b| a.timestamp_utc.cmp(&b.timestamp_utc).then_with(|| a.sha.cmp(&b.sha)));
    sorted
}

/// Computes the activity metrics of one developer's commits, in any order.
pub fn developer_features<'a, I>(commits: I) -> Result<DeveloperFeatures, FeatureError>
where
    I: IntoIterator<Item = &'a CommitRecord>,
{
    let commits = sorted_commits(commits);
    if commits.is_empty() {
        return Err(FeatureError::NoCommits(String::new()));
    }
    let n = commits.len();
    let local: Vec<LocalTime> = commits.iter().map(|c| c.local_time()).collect();

    let first_date = local.iter().map(|t| t.date).min().expect("nonempty");
    let last_date = local.iter().map(|t| t.date).max().expect("nonempty");
    let days = local.iter().map(|t| t.date).collect::<BTreeSet<_>>().len();
    let weeks = local.iter().map(|t| t.iso_week).collect::<BTreeSet<_>>().len();

    let mut gaps: Vec<f64> = commits
        .windows(2)
        .map(|w| (w[1].timestamp_utc - w[0].timestamp_utc) as f64 / SECONDS_PER_DAY)
        .collect();
    let timediff = median(&mut gaps).unwrap_or(0.0);

    let mut locs: Vec<f64> = commits.iter().filter_map(|c| c.loc()).map(|l| l as f64).collect();
    let loc_per_commit = median(&mut locs).unwrap_or(f64::NAN);

    let mut hour_counts = [0usize; 24];
    let mut parts = [0usize; 4];
    let (mut weekend, mut office) = (0usize, 0usize);
    let mut weekday_hours = Vec::new();
    for t in &local {
        hour_counts[t.hour as usize] += 1;
        parts[day_part(t.hour) as usize] += 1;
        weekend += usize::from(t.is_weekend());
        office += usize::from(is_office(t.hour));
        if !t.is_weekend() {
            weekday_hours.push(t.hour);
        }
    }
    let share = |count: usize| count as f64 / n as f64;
    // first maximum, so ties go to the earliest hour
    let most_active_hour = (0..24).rev().max_by_key(|&h| hour_counts[h]).expect("24 hours") as u32;

    weekday_hours.sort_unstable();
    let (beginning_regular, end_regular) = if weekday_hours.is_empty() {
        (0, 0)
    } else {
        (nearest_rank(&weekday_hours, 10), nearest_rank(&weekday_hours, 90))
    };

    Ok(DeveloperFeatures {
        period: (last_date - first_date).num_days(),
        days,
        weeks,
        timediff,
        commits: n,
        loc_per_commit,
        weekend: share(weekend),
        night: share(parts[DayPart::Night as usize]),
        morning: share(parts[DayPart::Morning as usize]),
        afternoon: share(parts[DayPart::Afternoon as usize]),
        evening: share(parts[DayPart::Evening as usize]),
        office: share(office),
        most_active_hour,
        beginning_regular,
        length_regular: end_regular - beginning_regular,
        end_regular,
    })
}

/// Pairs each identity with its commits, sorted by identity id. Shas without
/// a matching record are ignored.
pub fn group_commits<'a>(identities: &[Identity], records: &'a [CommitRecord]) -> Vec<(String, Vec<&'a CommitRecord>)> {
    let by_sha: HashMap<&str, &CommitRecord> = records.iter().map(|r| (r.sha.as_str(), r)).collect();
    let mut groups: Vec<(String, Vec<&CommitRecord>)> = identities
        .iter()
        .map(|identity| {
            let commits = identity.commit_shas.iter().filter_map(|s| by_sha.get(s.as_str()).copied()).collect();
            (identity.id.clone(), commits)
        })
        .collect();
    groups.sort_by(|a, b| a.0.cmp(&b.0));
    groups
}

/// A labelled numeric table: one row per identity (or commit).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Keeps the rows whose id satisfies `keep`, preserving order.
    pub fn filter_rows(&self, mut keep: impl FnMut(&str) -> bool) -> FeatureMatrix {
        let (ids, rows) = self
            .ids
            .iter()
            .zip(&self.rows)
            .filter(|(id, _)| keep(id))
            .map(|(id, row)| (id.clone(), row.clone()))
            .unzip();
        FeatureMatrix { ids, columns: self.columns.clone(), rows }
    }

    /// Writes the CSV form: header `identity,<columns>`, integer metrics as
    /// integers, other values with six decimals, NaN as `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FeatureError> {
        let csv_err = |e: csv::Error| FeatureError::Csv(e.to_string());
        let mut writer = csv::Writer::from_writer(out);
        let header = std::iter::once("identity").chain(self.columns.iter().map(String::as_str));
        writer.write_record(header).map_err(csv_err)?;
        let integral: Vec<bool> = self.columns.iter().map(|c| INTEGER_COLUMNS.contains(&c.as_str())).collect();
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let mut record = vec![id.clone()];
            record.extend(row.iter().zip(&integral).map(|(v, &int)| match v {
                v if v.is_nan() => "NA".to_string(),
                v if int => format!("{v:.0}"),
                v => format!("{v:.6}"),
            }));
            writer.write_record(&record).map_err(csv_err)?;
        }
        writer.flush().map_err(|e| FeatureError::Csv(e.to_string()))
    }

    /// Reads the CSV form written by [`FeatureMatrix::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<FeatureMatrix, FeatureError> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers().map_err(|e| FeatureError::Csv(e.to_string()))?.clone();
        if headers.get(0) != Some("identity") {
            return Err(FeatureError::Csv("first column must be `identity`".into()));
        }
        let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| FeatureError::Csv(e.to_string()))?;
            let line = i + 2;
            ids.push(record[0].to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|field| match field.trim() {
                    "NA" => Ok(f64::NAN),
                    v => v.parse::<f64>().map_err(|_| FeatureError::Csv(format!("line {line}: bad number {v:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(FeatureMatrix { ids, columns, rows })
    }
}

/// Developer metrics for every identity, rows sorted by identity id.
pub fn feature_matrix(
    groups: &[(String, Vec<&CommitRecord>)],
    mode: FeatureMode,
) -> Result<FeatureMatrix, FeatureError> {
    let mut sorted: Vec<&(String, Vec<&CommitRecord>)> = groups.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let rows = sorted
        .par_iter()
        .map(|(id, commits)| {
            developer_features(commits.iter().copied())
                .map(|f| f.values(mode))
                .map_err(|_| FeatureError::NoCommits(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureMatrix {
        ids: sorted.iter().map(|(id, _)| id.clone()).collect(),
        columns: mode.columns().into_iter().map(str::to_string).collect(),
        rows,
    })
}

/// Feature vector of one commit.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitFeatures {
    pub sha: String,
    pub weekend: bool,
    pub hour: u32,
    pub night: bool,
    pub morning: bool,
    pub afternoon: bool,
    pub evening: bool,
    pub office: bool,
    /// Added + deleted lines, the author's median when unknown.
    pub loc: f64,
    /// Days since the author's previous commit, the author's median gap for
    /// the first commit.
    pub time_since_prev: f64,
    pub author_weekend: f64,
    pub author_night: f64,
    pub author_morning: f64,
    pub author_afternoon: f64,
    pub author_evening: f64,
    pub author_office: f64,
}

impl CommitFeatures {
    pub fn values(&self) -> Vec<f64> {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        vec![
            flag(self.weekend),
            f64::from(self.hour),
            flag(self.night),
            flag(self.morning),
            flag(self.afternoon),
            flag(self.evening),
            flag(self.office),
            self.loc,
            self.time_since_prev,
            self.author_weekend,
            self.author_night,
            self.author_morning,
            self.author_afternoon,
            self.author_evening,
            self.author_office,
        ]
    }
}

/// Per-commit vectors of one developer, in (timestamp, sha) order.
pub fn commit_features<'a, I>(commits: I, aggregates: &DeveloperFeatures) -> Vec<CommitFeatures>
where
    I: IntoIterator<Item = &'a CommitRecord>,
{
    let commits = sorted_commits(commits);
    let mut previous: Option<i64> = None;
    commits
        .iter()
        .map(|c| {
            let t = c.local_time();
            let part = day_part(t.hour);
            let time_since_prev = previous
                .map(|p| (c.timestamp_utc - p) as f64 / SECONDS_PER_DAY)
                .unwrap_or(aggregates.timediff);
            previous = Some(c.timestamp_utc);
            CommitFeatures {
                sha: c.sha.clone(),
                weekend: t.is_weekend(),
                hour: t.hour,
                night: matches!(part, DayPart::Night),
                morning: matches!(part, DayPart::Morning),
                afternoon: matches!(part, DayPart::Afternoon),
                evening: matches!(part, DayPart::Evening),
                office: is_office(t.hour),
                loc: c.loc().map(|l| l as f64).unwrap_or(aggregates.loc_per_commit),
                time_since_prev,
                author_weekend: aggregates.weekend,
                author_night: aggregates.night,
                author_morning: aggregates.morning,
                author_afternoon: aggregates.afternoon,
                author_evening: aggregates.evening,
                author_office: aggregates.office,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    pub(crate) fn at(n: u32, y: i32, m: u32, d: u32, hh: u32, mm: u32, loc: i64) -> CommitRecord {
        let ts = NaiveDate::from_ymd_opt(y, m, d).unwrap().and_hms_opt(hh, mm, 0).unwrap().and_utc().timestamp();
        CommitRecord {
            sha: format!("{n:040x}"),
            author_name: "Dev".into(),
            author_email: "dev@x.org".into(),
            timestamp_utc: ts,
            tz_offset_minutes: 0,
            lines_added: loc,
            lines_deleted: 0,
            message: String::new(),
        }
    }

    fn fixture() -> Vec<CommitRecord> {
        vec![
            at(1, 2017, 1, 2, 9, 0, 10),
            at(2, 2017, 1, 2, 14, 30, 4),
            at(3, 2017, 1, 7, 22, 0, 6),
            at(4, 2017, 1, 8, 2, 0, 2),
        ]
    }

    #[test]
    fn fixture_metrics() {
        let f = developer_features(&fixture()).unwrap();
        assert_eq!((f.commits, f.days, f.weeks, f.period), (4, 3, 1, 6));
        assert!((f.timediff - 0.229_166_666_666_666_66).abs() < 1e-12);
        assert_eq!(f.loc_per_commit, 5.0);
        assert_eq!((f.weekend, f.office), (0.5, 0.5));
        assert_eq!((f.night, f.morning, f.afternoon, f.evening), (0.25, 0.25, 0.25, 0.25));
        assert_eq!((f.most_active_hour, f.beginning_regular, f.end_regular, f.length_regular), (2, 9, 14, 5));
    }

    #[test]
    fn single_commit_degenerates() {
        let f = developer_features(&[at(1, 2017, 1, 2, 10, 0, 3)]).unwrap();
        assert_eq!((f.period, f.days, f.weeks, f.timediff), (0, 1, 1, 0.0));
        assert_eq!((f.morning, f.office, f.weekend), (1.0, 1.0, 0.0));
        assert_eq!((f.most_active_hour, f.beginning_regular, f.end_regular, f.length_regular), (10, 10, 10, 0));
    }

    #[test]
    fn identical_timestamps() {
        let a = at(1, 2017, 1, 2, 10, 0, 3);
        let mut b = a.clone();
        b.sha = format!("{:040x}", 2);
        let f = developer_features(&[a, b]).unwrap();
        assert_eq!((f.timediff, f.commits, f.days), (0.0, 2, 1));
    }

    #[test]
    fn no_commits_is_an_error() {
        assert!(developer_features(&[]).is_err());
    }

    #[test]
    fn weekend_only_has_zero_regular_hours() {
        let f = developer_features(&[at(1, 2017, 1, 7, 15, 0, 1)]).unwrap();
        assert_eq!((f.beginning_regular, f.end_regular, f.length_regular), (0, 0, 0));
    }

    #[test]
    fn unknown_loc_is_excluded() {
        let mut c = fixture();
        c[0].lines_added = -1;
        c[0].lines_deleted = -1;
        assert_eq!(developer_features(&c).unwrap().loc_per_commit, 4.0);
        for r in &mut c {
            r.lines_added = -1;
            r.lines_deleted = -1;
        }
        assert!(developer_features(&c).unwrap().loc_per_commit.is_nan());
    }

    #[test]
    fn offsets_shift_local_time() {
        // 23:30 UTC Friday is 00:30 Saturday at +0100
        let mut c = at(1, 2017, 1, 6, 23, 30, 1);
        c.tz_offset_minutes = 60;
        let f = developer_features(&[c]).unwrap();
        assert_eq!((f.weekend, f.night, f.most_active_hour), (1.0, 1.0, 0));
    }

    #[test]
    fn matrix_modes() {
        let commits = fixture();
        let groups = vec![("dev@x.org".to_string(), commits.iter().collect::<Vec<_>>())];
        let all = feature_matrix(&groups, FeatureMode::All).unwrap();
        let reduced = feature_matrix(&groups, FeatureMode::NoVolume).unwrap();
        assert_eq!(all.columns.len(), 16);
        assert_eq!(reduced.columns.len(), 12);
        assert_eq!(all.rows.len(), 1);
        let dropped: BTreeSet<&str> =
            all.columns.iter().map(String::as_str).filter(|c| !reduced.columns.iter().any(|r| r == c)).collect();
        assert_eq!(dropped, VOLUME_COLUMNS.into_iter().collect());
    }

    #[test]
    fn csv_layout() {
        let commits = fixture();
        let groups = vec![("dev@x.org".to_string(), commits.iter().collect::<Vec<_>>())];
        let m = feature_matrix(&groups, FeatureMode::All).unwrap();
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "identity,period,days,weeks,timediff,commits,loc_per_commit,weekend,night,morning,afternoon,\
             evening,office,most_active_hour,beginning_regular,length_regular,end_regular"
        );
        assert_eq!(
            lines.next().unwrap(),
            "dev@x.org,6,3,1,0.229167,4,5.000000,0.500000,0.250000,0.250000,0.250000,0.250000,0.500000,2,9,5,14"
        );
        let back = FeatureMatrix::read_csv(out.as_slice()).unwrap();
        assert_eq!(back.columns, m.columns);
        assert!((back.rows[0][3] - m.rows[0][3]).abs() < 1e-6);
        assert!(FeatureMatrix::read_csv("identity,a\nx,oops\n".as_bytes()).is_err());
    }

    #[test]
    fn commit_level_flags() {
        let commits = fixture();
        let agg = developer_features(&commits).unwrap();
        let rows = commit_features(commits.iter().rev(), &agg);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].time_since_prev, agg.timediff);
        let sat = &rows[2];
        assert!(sat.weekend && sat.evening && !sat.office);
        for r in &rows {
            let flags = [r.night, r.morning, r.afternoon, r.evening];
            assert_eq!(flags.iter().filter(|&&b| b).count(), 1);
        }
        let count = |f: fn(&CommitFeatures) -> bool| rows.iter().filter(|r| f(r)).count() as f64;
        assert_eq!(count(|r| r.weekend), agg.weekend * 4.0);
        assert_eq!(count(|r| r.office), agg.office * 4.0);
        assert_eq!(count(|r| r.night), agg.night * 4.0);
    }

    #[test]
    fn commit_level_imputes_unknown_loc() {
        let mut commits = fixture();
        commits[1].lines_added = -1;
        commits[1].lines_deleted = -1;
        let agg = developer_features(&commits).unwrap();
        let rows = commit_features(&commits, &agg);
        assert_eq!(rows[1].loc, agg.loc_per_commit);
        assert_eq!(rows[1].values().len(), COMMIT_COLUMNS.len());
    }

    /// Straightforward median: sort a copy and index.
    fn median_oracle(values: &[f64]) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }

    fn arb_commits() -> impl Strategy<Value = Vec<CommitRecord>> {
        proptest::collection::vec((0i64..200_000_000, -720i32..=840, -1i64..500), 1..60).prop_map(|raw| {
            raw.into_iter()
                .enumerate()
                .map(|(i, (ts, off, loc))| CommitRecord {
                    sha: format!("{i:040x}"),
                    author_name: "P".into(),
                    author_email: "p@x".into(),
                    timestamp_utc: 1_300_000_000 + ts,
                    tz_offset_minutes: off,
                    lines_added: loc,
                    lines_deleted: if loc < 0 { -1 } else { 1 },
                    message: String::new(),
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn median_matches_oracle(values in proptest::collection::vec(-1e6f64..1e6, 1..1000)) {
            let mut v = values.clone();
            prop_assert_eq!(median(&mut v).unwrap(), median_oracle(&values));
        }

        #[test]
        fn metric_invariants(commits in arb_commits(), seed in any::<u64>()) {
            let f = developer_features(&commits).unwrap();
            prop_assert!((f.night + f.morning + f.afternoon + f.evening - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&f.weekend) && (0.0..=1.0).contains(&f.office));
            prop_assert!(f.days as i64 <= f.period + 1);
            prop_assert!(f.weeks <= f.days && f.days <= f.commits);
            prop_assert_eq!(f.length_regular, f.end_regular - f.beginning_regular);

            // order independence
            let mut shuffled = commits.clone();
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            prop_assert_eq!(&developer_features(&shuffled).unwrap().values(FeatureMode::All)
                .iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                &f.values(FeatureMode::All).iter().map(|v| v.to_bits()).collect::<Vec<_>>());

            // flags reproduce shares exactly
            let rows = commit_features(&commits, &f);
            let n = rows.len() as f64;
            let share = |p: fn(&CommitFeatures) -> bool| rows.iter().filter(|r| p(r)).count() as f64 / n;
            prop_assert_eq!(share(|r| r.weekend), f.weekend);
            prop_assert_eq!(share(|r| r.night), f.night);
            prop_assert_eq!(share(|r| r.morning), f.morning);
            prop_assert_eq!(share(|r| r.afternoon), f.afternoon);
            prop_assert_eq!(share(|r| r.evening), f.evening);
            prop_assert_eq!(share(|r| r.office), f.office);
        }
    }
}
