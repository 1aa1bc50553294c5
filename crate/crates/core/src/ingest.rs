//! Commit ingestion: `git log` export parsing, local-time decomposition and
//! the canonical JSON-lines commit file.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use chrono::{DateTime, Datelike, NaiveDate, Timelike, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The export command understood by [`parse_git_log`].
pub const GIT_EXPORT_COMMAND: &str = "git log --all --no-merges --date-order \
--pretty=format:'%x1e%H%x1f%an%x1f%ae%x1f%at%x1f%ad' \
--date=format:'%Y-%m-%d %H:%M:%S %z' --numstat";

/// Same as [`GIT_EXPORT_COMMAND`] but also carries the full commit message,
/// which issue linking needs.
pub const GIT_EXPORT_COMMAND_WITH_MESSAGE: &str = "git log --all --no-merges --date-order \
--pretty=format:'%x1e%H%x1f%an%x1f%ae%x1f%at%x1f%ad%x1f%B%x1f' \
--date=format:'%Y-%m-%d %H:%M:%S %z' --numstat";

const RECORD_START: u8 = 0x1e;
const FIELD_SEP: char = '\x1f';

pub const MAX_OFFSET_MINUTES: i32 = 1440;
// 0001-01-01T00:00:00Z and 9999-12-31T23:59:59Z
const MIN_TIMESTAMP: i64 = -62_135_596_800;
const MAX_TIMESTAMP: i64 = 253_402_300_799;

/// One commit's metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitRecord {
    pub sha: String,
    pub author_name: String,
    pub author_email: String,
    pub timestamp_utc: i64,
    pub tz_offset_minutes: i32,
    pub lines_added: i64,
    pub lines_deleted: i64,
    pub message: String,
}

pub const CANONICAL_FIELDS: [&str; 8] = [
    "sha",
    "author_name",
    "author_email",
    "timestamp_utc",
    "tz_offset_minutes",
    "lines_added",
    "lines_deleted",
    "message",
];

impl CommitRecord {
    /// Checks the record invariants, returning a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        if !is_sha(&self.sha) {
            return Err(format!("sha {:?} is not 40 lowercase hex digits", self.sha));
        }
        if self.tz_offset_minutes.abs() > MAX_OFFSET_MINUTES {
            return Err(format!("tz_offset_minutes {} out of range", self.tz_offset_minutes));
        }
        if !(MIN_TIMESTAMP..=MAX_TIMESTAMP).contains(&self.timestamp_utc) {
            return Err(format!("timestamp_utc {} out of range", self.timestamp_utc));
        }
        if self.author_email != self.author_email.to_lowercase() {
            return Err(format!("author_email {:?} is not lowercase", self.author_email));
        }
        if self.lines_added < -1 || self.lines_deleted < -1 {
            return Err("line counts must be >= 0 or -1".to_string());
        }
        Ok(())
    }

    pub fn local_time(&self) -> LocalTime {
        to_local(self.timestamp_utc, self.tz_offset_minutes)
    }

    /// `lines_added + lines_deleted`, or `None` when the counts are unknown.
    pub fn loc(&self) -> Option<i64> {
        (self.lines_added >= 0 && self.lines_deleted >= 0)
            .then(|| self.lines_added + self.lines_deleted)
    }
}

fn is_sha(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

/// Civil time at the commit author's location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalTime {
    pub date: NaiveDate,
    pub hour: u32,
    pub minute: u32,
    pub weekday: Weekday,
    /// (ISO year, ISO week number), weeks starting on Monday.
    pub iso_week: (i32, u32),
}

impl LocalTime {
    pub fn is_weekend(&self) -> bool {
        matches!(self.weekday, Weekday::Sat | Weekday::Sun)
    }
}

/// Shifts a UTC instant by a fixed offset and decomposes the result.
///
/// Only the offset recorded with the commit is used; no timezone database is
/// consulted. `ts` must lie within years 1..=9999 (guaranteed for validated
/// records).
pub fn to_local(ts: i64, offset_minutes: i32) -> LocalTime {
    let shifted = ts + 60 * i64::from(offset_minutes);
    let dt = DateTime::from_timestamp(shifted, 0)
        .expect("timestamp within the supported calendar range")
        .naive_utc();
    let iso = dt.date().iso_week();
    LocalTime {
        date: dt.date(),
        hour: dt.hour(),
        minute: dt.minute(),
        weekday: dt.weekday(),
        iso_week: (iso.year(), iso.week()),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed record {record} at byte {offset}: {reason}")]
    Malformed { record: usize, offset: usize, reason: String },
    #[error("invalid timezone offset {value:?} in record {record} at byte {offset}")]
    InvalidOffset { record: usize, offset: usize, value: String },
    #[error("duplicate commit {sha} in record {record} at byte {offset}")]
    Duplicate { record: usize, offset: usize, sha: String },
}

/// Parses the output of [`GIT_EXPORT_COMMAND`] (or the message-carrying
/// variant) into commit records, in stream order.
///
/// Line counts are summed over the numstat entries; binary entries (`-`) are
/// left out of the sums, and a commit whose entries are all binary gets
/// `-1`/`-1`.
pub fn parse_git_log(input: &[u8]) -> Result<Vec<CommitRecord>, IngestError> {
    let starts: Vec<usize> = input
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| (b == RECORD_START).then_some(i))
        .collect();
    let preamble_end = starts.first().copied().unwrap_or(input.len());
    if !input[..preamble_end].iter().all(u8::is_ascii_whitespace) {
        return Err(IngestError::Malformed {
            record: 0,
            offset: 0,
            reason: "data before the first record marker".into(),
        });
    }

    let mut records = Vec::with_capacity(starts.len());
    let mut seen = HashSet::with_capacity(starts.len());
    for (index, &start) in starts.iter().enumerate() {
        let end = starts.get(index + 1).copied().unwrap_or(input.len());
        let text = String::from_utf8_lossy(&input[start + 1..end]);
        let record = parse_record(&text, index, start)?;
        if !seen.insert(record.sha.clone()) {
            return Err(IngestError::Duplicate { record: index, offset: start, sha: record.sha });
        }
        records.push(record);
    }
    Ok(records)
}

fn parse_record(text: &str, record: usize, offset: usize) -> Result<CommitRecord, IngestError> {
    let malformed = |reason: String| IngestError::Malformed { record, offset, reason };
    let fields: Vec<&str> = text.split(FIELD_SEP).collect();
    let (sha, name, email, at, date, message, numstat) = match fields.as_slice() {
        [sha, name, email, at, rest] => {
            let (date, numstat) = rest.split_once('\n').unwrap_or((rest, ""));
            (*sha, *name, *email, *at, date, "", numstat)
        }
        [sha, name, email, at, date, message, numstat] => {
            (*sha, *name, *email, *at, *date, *message, *numstat)
        }
        other => {
            return Err(malformed(format!("expected 5 or 7 header fields, found {}", other.len())))
        }
    };

    let sha = sha.trim().to_ascii_lowercase();
    if !is_sha(&sha) {
        return Err(malformed(format!("bad commit id {sha:?}")));
    }
    let timestamp_utc: i64 = at
        .trim()
        .parse()
        .map_err(|_| malformed(format!("bad author timestamp {:?}", at.trim())))?;
    if !(MIN_TIMESTAMP..=MAX_TIMESTAMP).contains(&timestamp_utc) {
        return Err(malformed(format!("author timestamp {timestamp_utc} out of range")));
    }
    let date = date.trim();
    let tz_offset_minutes = date
        .rsplit(char::is_whitespace)
        .next()
        .and_then(parse_offset)
        .ok_or_else(|| IngestError::InvalidOffset { record, offset, value: date.to_string() })?;

    let (lines_added, lines_deleted) = parse_numstat(numstat).map_err(malformed)?;

    Ok(CommitRecord {
        sha,
        author_name: name.to_string(),
        author_email: email.trim().to_lowercase(),
        timestamp_utc,
        tz_offset_minutes,
        lines_added,
        lines_deleted,
        message: message.trim_end().to_string(),
    })
}

/// Parses `+HHMM` / `-HHMM` into minutes east of UTC.
fn parse_offset(s: &str) -> Option<i32> {
    let (sign, digits) = match s.as_bytes().first()? {
        b'+' => (1, &s[1..]),
        b'-' => (-1, &s[1..]),
        _ => return None,
    };
    if digits.len() != 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let hours: i32 = digits[..2].parse().ok()?;
    let minutes: i32 = digits[2..].parse().ok()?;
    if minutes >= 60 {
        return None;
    }
    let total = sign * (hours * 60 + minutes);
    (total.abs() <= MAX_OFFSET_MINUTES).then_some(total)
}

fn parse_numstat(block: &str) -> Result<(i64, i64), String> {
    let mut added = 0i64;
    let mut deleted = 0i64;
    let mut text_entries = 0usize;
    let mut binary_entries = 0usize;
    for line in block.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let mut parts: Vec<&str> = line.splitn(3, '\t').collect();
        if parts.len() < 3 {
            parts = line.splitn(3, char::is_whitespace).collect();
        }
        let [a, d, path] = parts.as_slice() else {
            return Err(format!("bad numstat line {line:?}"));
        };
        if path.trim().is_empty() {
            return Err(format!("numstat line without path {line:?}"));
        }
        match (*a, *d) {
            ("-", "-") => binary_entries += 1,
            (a, d) => {
                let a: i64 = a.parse().map_err(|_| format!("bad numstat count {a:?}"))?;
                let d: i64 = d.parse().map_err(|_| format!("bad numstat count {d:?}"))?;
                if a < 0 || d < 0 {
                    return Err(format!("negative numstat count in {line:?}"));
                }
                added = added.checked_add(a).ok_or("numstat overflow")?;
                deleted = deleted.checked_add(d).ok_or("numstat overflow")?;
                text_entries += 1;
            }
        }
    }
    if text_entries == 0 && binary_entries > 0 {
        Ok((-1, -1))
    } else {
        Ok((added, deleted))
    }
}

#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("line {line}: unknown field `{field}`")]
    UnknownField { line: usize, field: String },
    #[error("line {line}: {message}")]
    Type { line: usize, message: String },
    #[error("line {line}: invalid record: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: duplicate commit {sha}")]
    Duplicate { line: usize, sha: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes one JSON object per record, `\n`-terminated.
pub fn write_canonical<W: Write>(records: &[CommitRecord], mut out: W) -> Result<(), CanonicalError> {
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a canonical commit file; blank lines are skipped.
pub fn read_canonical<R: BufRead>(input: R) -> Result<Vec<CommitRecord>, CanonicalError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let type_err = |e: serde_json::Error| CanonicalError::Type { line: line_no, message: e.to_string() };
        let value: serde_json::Value = serde_json::from_str(&line).map_err(type_err)?;
        let Some(object) = value.as_object() else {
            return Err(CanonicalError::Type { line: line_no, message: "expected a JSON object".into() });
        };
        if let Some(field) = object.keys().find(|k| !CANONICAL_FIELDS.contains(&k.as_str())) {
            return Err(CanonicalError::UnknownField { line: line_no, field: field.clone() });
        }
        let record: CommitRecord = serde_json::from_value(value).map_err(type_err)?;
        record
            .validate()
            .map_err(|message| CanonicalError::Invalid { line: line_no, message })?;
        if !seen.insert(record.sha.clone()) {
            return Err(CanonicalError::Duplicate { line: line_no, sha: record.sha });
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHA_A: &str = "0123456789abcdef0123456789abcdef01234567";
    const SHA_B: &str = "89abcdef0123456789abcdef0123456789abcdef";

    fn header(sha: &str, name: &str, email: &str, at: i64, date: &str) -> String {
        format!("\x1e{sha}\x1f{name}\x1f{email}\x1f{at}\x1f{date}")
    }

    #[test]
    fn parses_header_and_numstat() {
        let log = format!(
            "{}\n\n3\t1\tsrc/a.c\n",
            header(SHA_A, "Alice", "A@X.COM", 1483348800, "2017-01-02 14:00:00 +0500")
        );
        let records = parse_git_log(log.as_bytes()).unwrap();
        assert_eq!(
            records,
            vec![CommitRecord {
                sha: SHA_A.into(),
                author_name: "Alice".into(),
                author_email: "a@x.com".into(),
                timestamp_utc: 1483348800,
                tz_offset_minutes: 300,
                lines_added: 3,
                lines_deleted: 1,
                message: String::new(),
            }]
        );
    }

    #[test]
    fn space_separated_numstat_is_accepted() {
        let log = format!("{}\n3 1 src/a.c\n", header(SHA_A, "A", "a@x", 0, "1970-01-01 00:00:00 +0000"));
        let r = &parse_git_log(log.as_bytes()).unwrap()[0];
        assert_eq!((r.lines_added, r.lines_deleted), (3, 1));
    }

    #[test]
    fn empty_stream_yields_nothing() {
        assert!(parse_git_log(b"").unwrap().is_empty());
        assert!(parse_git_log(b"\n  \n").unwrap().is_empty());
    }

    #[test]
    fn binary_only_commit_has_unknown_counts() {
        let log = format!("{}\n\n-\t-\timage.png\n", header(SHA_A, "A", "a@x", 0, "1970-01-01 00:00:00 +0000"));
        let r = &parse_git_log(log.as_bytes()).unwrap()[0];
        assert_eq!((r.lines_added, r.lines_deleted), (-1, -1));
    }

    #[test]
    fn binary_entries_are_left_out_of_sums() {
        let log = format!(
            "{}\n\n-\t-\timage.png\n2\t5\ta.rs\n1\t0\tb.rs\n",
            header(SHA_A, "A", "a@x", 0, "1970-01-01 00:00:00 +0000")
        );
        let r = &parse_git_log(log.as_bytes()).unwrap()[0];
        assert_eq!((r.lines_added, r.lines_deleted), (3, 5));
    }

    #[test]
    fn commit_without_numstat_has_zero_counts() {
        let log = header(SHA_A, "A", "a@x", 0, "1970-01-01 00:00:00 -0130");
        let r = &parse_git_log(log.as_bytes()).unwrap()[0];
        assert_eq!((r.lines_added, r.lines_deleted, r.tz_offset_minutes), (0, 0, -90));
    }

    #[test]
    fn message_variant_is_parsed() {
        let log = format!(
            "{}\x1fBug 123456 - fix\n\nr=foo\n\x1f\n4\t2\tx.c\n{}\x1fsecond\n\x1f\n",
            header(SHA_A, "A", "a@x", 10, "1970-01-01 00:00:10 +0000"),
            header(SHA_B, "B", "b@x", 20, "1970-01-01 00:00:20 +0000"),
        );
        let records = parse_git_log(log.as_bytes()).unwrap();
        assert_eq!(records[0].message, "Bug 123456 - fix\n\nr=foo");
        assert_eq!((records[0].lines_added, records[0].lines_deleted), (4, 2));
        assert_eq!(records[1].message, "second");
        assert_eq!((records[1].lines_added, records[1].lines_deleted), (0, 0));
    }

    #[test]
    fn malformed_header_reports_record_and_offset() {
        let good = header(SHA_A, "A", "a@x", 0, "1970-01-01 00:00:00 +0000");
        let log = format!("{good}\n\x1enot-a-sha\x1fB\x1fb@x\x1f0\x1f1970-01-01 00:00:00 +0000\n");
        match parse_git_log(log.as_bytes()) {
            Err(IngestError::Malformed { record, offset, .. }) => {
                assert_eq!(record, 1);
                assert_eq!(offset, good.len() + 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        let short = "\x1eabc\x1fonly";
        assert!(matches!(parse_git_log(short.as_bytes()), Err(IngestError::Malformed { record: 0, .. })));
    }

    #[test]
    fn invalid_offsets_are_rejected() {
        for bad in ["+5", "0500", "+2500", "+0560", "+05:00", ""] {
            let log = header(SHA_A, "A", "a@x", 0, &format!("2017-01-02 14:00:00 {bad}"));
            assert!(
                matches!(parse_git_log(log.as_bytes()), Err(IngestError::InvalidOffset { .. })),
                "{bad}"
            );
        }
        let log = header(SHA_A, "A", "a@x", 0, "2017-01-02 14:00:00 +2400");
        assert_eq!(parse_git_log(log.as_bytes()).unwrap()[0].tz_offset_minutes, 1440);
    }

    #[test]
    fn duplicate_sha_is_an_error() {
        let h = header(SHA_A, "A", "a@x", 0, "1970-01-01 00:00:00 +0000");
        let log = format!("{h}\n{h}\n");
        assert!(matches!(parse_git_log(log.as_bytes()), Err(IngestError::Duplicate { record: 1, .. })));
    }

    #[test]
    fn junk_before_first_record_is_rejected() {
        let log = format!("garbage{}", header(SHA_A, "A", "a@x", 0, "1970-01-01 00:00:00 +0000"));
        assert!(parse_git_log(log.as_bytes()).is_err());
    }

    #[test]
    fn to_local_examples() {
        let t = to_local(1483255800, 120);
        assert_eq!(t.date, NaiveDate::from_ymd_opt(2017, 1, 1).unwrap());
        assert_eq!((t.hour, t.minute, t.weekday), (9, 30, Weekday::Sun));

        let t = to_local(1483315200, -60);
        assert_eq!(t.date, NaiveDate::from_ymd_opt(2017, 1, 1).unwrap());
        assert_eq!((t.hour, t.weekday, t.iso_week), (23, Weekday::Sun, (2016, 52)));

        let t = to_local(1483315200, 0);
        assert_eq!((t.hour, t.weekday, t.iso_week), (0, Weekday::Mon, (2017, 1)));
    }

    fn sample(sha: &str) -> CommitRecord {
        CommitRecord {
            sha: sha.into(),
            author_name: "Zoë \"Z\" Ünïcode".into(),
            author_email: "z@x.org".into(),
            timestamp_utc: 1_500_000_000,
            tz_offset_minutes: -420,
            lines_added: -1,
            lines_deleted: -1,
            message: "line one\nline two\t✓".into(),
        }
    }

    #[test]
    fn canonical_line_has_exact_keys() {
        let mut out = Vec::new();
        write_canonical(&[sample(SHA_A)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), 1);
        let value: serde_json::Value = serde_json::from_str(text.trim_end()).unwrap();
        let mut keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        let mut expected: Vec<_> = CANONICAL_FIELDS.iter().map(|s| s.to_string()).collect();
        expected.sort();
        assert_eq!(keys, expected);
    }

    #[test]
    fn canonical_rejects_extra_key_with_line_number() {
        let mut out = Vec::new();
        write_canonical(&[sample(SHA_A)], &mut out).unwrap();
        let mut bad: serde_json::Value = serde_json::from_slice(&out).unwrap();
        bad["sha"] = SHA_B.into();
        bad["foo"] = 1.into();
        out.extend_from_slice(bad.to_string().as_bytes());
        match read_canonical(out.as_slice()) {
            Err(CanonicalError::UnknownField { line, field }) => assert_eq!((line, field.as_str()), (2, "foo")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_type_mismatch_and_invariants() {
        let line = r#"{"sha":"0123456789abcdef0123456789abcdef01234567","author_name":"A","author_email":"a@x","timestamp_utc":"soon","tz_offset_minutes":0,"lines_added":0,"lines_deleted":0,"message":""}"#;
        assert!(matches!(read_canonical(line.as_bytes()), Err(CanonicalError::Type { line: 1, .. })));
        let upper = line.replace("\"soon\"", "0").replace("a@x", "A@X");
        assert!(matches!(read_canonical(upper.as_bytes()), Err(CanonicalError::Invalid { line: 1, .. })));
        let off = line.replace("\"soon\"", "0").replace("\"tz_offset_minutes\":0", "\"tz_offset_minutes\":1441");
        assert!(matches!(read_canonical(off.as_bytes()), Err(CanonicalError::Invalid { .. })));
    }
}
