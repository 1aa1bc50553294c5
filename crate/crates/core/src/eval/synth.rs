use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::CommitRecord;
use crate::labels::{LabelSet, Status};
use crate::rng;

/// How hired and volunteer developers spread their commits over the week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Employees commit on weekdays 9:00–17:00, volunteers in the evening
    /// and at night, half of it on weekends. The hour ranges are disjoint.
    Separable,
    /// Every developer has a personal office-hours and weekend propensity;
    /// the class ranges overlap.
    Overlapping,
    /// Hours are uniform for everybody; only the weekend share differs.
    WeekendSeparable,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Separable => "separable",
            Profile::Overlapping => "overlapping",
            Profile::WeekendSeparable => "weekend_separable",
        })
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "separable" => Ok(Profile::Separable),
            "overlapping" => Ok(Profile::Overlapping),
            "weekend_separable" => Ok(Profile::WeekendSeparable),
            other => Err(format!("unknown profile {other:?} (expected separable, overlapping or weekend_separable)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub developers: usize,
    /// Share of hired developers, rounded to a whole count.
    pub hired_share: f64,
    pub profile: Profile,
    pub min_commits: usize,
    pub max_commits: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { developers: 200, hired_share: 0.5, profile: Profile::Separable, min_commits: 120, max_commits: 300 }
    }
}

/// Generated commits (sorted by time, then sha) and one label per developer
/// keyed by the developer's email.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<CommitRecord>,
    pub labels: Vec<(String, Status)>,
}

impl SynthCorpus {
    pub fn label_set(&self) -> LabelSet {
        LabelSet { entries: self.labels.iter().cloned().collect(), periods: Default::default() }
    }

    /// Labels in the CSV format read by [`crate::labels::load_labels`].
    pub fn labels_csv(&self) -> String {
        let mut out = String::from("identity,status,hired_from,hired_to\n");
        for (id, status) in &self.labels {
            out.push_str(&format!("{id},{status},,\n"));
        }
        out
    }
}

const OFFSETS: [i32; 10] = [-480, -420, -300, -240, 0, 60, 120, 330, 540, 600];

struct Habits {
    weekend: f64,
    office: f64,
}

fn habits(profile: Profile, hired: bool, r: &mut ChaCha8Rng) -> Habits {
    match (profile, hired) {
        (Profile::Separable, true) => Habits { weekend: 0.0, office: 1.0 },
        (Profile::Separable, false) => Habits { weekend: 0.5, office: 0.0 },
        (Profile::Overlapping, true) => Habits { weekend: r.gen_range(0.02..0.3), office: r.gen_range(0.3..0.8) },
        (Profile::Overlapping, false) => Habits { weekend: r.gen_range(0.1..0.45), office: r.gen_range(0.1..0.6) },
        (Profile::WeekendSeparable, true) => Habits { weekend: r.gen_range(0.0..0.1), office: 9.0 / 24.0 },
        (Profile::WeekendSeparable, false) => Habits { weekend: r.gen_range(0.35..0.6), office: 9.0 / 24.0 },
    }
}

fn local_hour(profile: Profile, habits: &Habits, weekend: bool, r: &mut ChaCha8Rng) -> u32 {
    match profile {
        Profile::WeekendSeparable => r.gen_range(0..24),
        // weekend commits never land in the office window anyway
        _ if !weekend && r.gen_bool(habits.office) => r.gen_range(9..17),
        Profile::Separable => *[19, 20, 21, 22, 23, 0, 1].choose(r).expect("non-empty"),
        Profile::Overlapping => *[7, 8, 17, 18, 19, 20, 21, 22, 23, 0].choose(r).expect("non-empty"),
    }
}

fn random_sha(r: &mut ChaCha8Rng) -> String {
    format!("{:032x}{:08x}", r.gen::<u128>(), r.gen::<u32>())
}

/// Deterministic synthetic histories with known labels.
///
/// Developer `i` draws from its own stream derived from `(seed, i)`; the
/// first `round(developers * hired_share)` developers are hired. Hired
/// developers commit from a company address half of the time.
pub fn generate_synthetic_corpus(spec: &SynthSpec, seed: u64) -> SynthCorpus {
    assert!(spec.min_commits >= 1 && spec.min_commits <= spec.max_commits, "invalid commit range");
    let hired_count = (spec.developers as f64 * spec.hired_share.clamp(0.0, 1.0)).round() as usize;
    // a Monday
    let epoch = NaiveDate::from_ymd_opt(2012, 1, 2).expect("valid date");
    let mut records = Vec::new();
    let mut labels = Vec::new();
    let mut seen = HashSet::new();
    for i in 0..spec.developers {
        let mut r = rng::stream(seed, &[rng::TAG_SYNTH, i as u64]);
        let hired = i < hired_count;
        let email = match (hired, r.gen_bool(0.5)) {
            (true, true) => format!("dev{i:04}@mozilla.com"),
            (true, false) => format!("dev{i:04}@example.org"),
            (false, _) => format!("dev{i:04}@example.net"),
        };
        let name = format!("Developer {i:04}");
        let habits = habits(spec.profile, hired, &mut r);
        let offset = *OFFSETS.choose(&mut r).expect("non-empty");
        let first_week: i64 = r.gen_range(0..260);
        let weeks: i64 = r.gen_range(30..160);
        let n = r.gen_range(spec.min_commits..=spec.max_commits);
        for _ in 0..n {
            let weekend = r.gen_bool(habits.weekend);
            let weekday: i64 = if weekend { r.gen_range(5..7) } else { r.gen_range(0..5) };
            let date = epoch + Duration::days(7 * (first_week + r.gen_range(0..weeks)) + weekday);
            let hour = local_hour(spec.profile, &habits, weekend, &mut r);
            let minute: u32 = r.gen_range(0..60);
            let second: u32 = r.gen_range(0..60);
            let local = date.and_hms_opt(hour, minute, second).expect("valid time").and_utc().timestamp();
            let sha = loop {
                let sha = random_sha(&mut r);
                if seen.insert(sha.clone()) {
                    break sha;
                }
            };
            records.push(CommitRecord {
                sha,
                author_name: name.clone(),
                author_email: email.clone(),
                timestamp_utc: local - i64::from(offset) * 60,
                tz_offset_minutes: offset,
                lines_added: r.gen_range(0..200),
                lines_deleted: r.gen_range(0..60),
                message: format!("Bug {} - change", r.gen_range(100_000..1_500_000)),
            });
        }
        labels.push((email, if hired { Status::Hired } else { Status::Volunteer }));
    }
    records.sort_by(|a, b| a.timestamp_utc.cmp(&b.timestamp_utc).then_with(|| a.sha.cmp(&b.sha)));
    labels.sort_by(|a, b| a.0.cmp(&b.0));
    SynthCorpus { records, labels }
}
