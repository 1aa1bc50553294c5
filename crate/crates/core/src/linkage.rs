//! Issue linking and product filtering.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::sync::OnceLock;

use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::ingest::CommitRecord;

/// A commit's reference to an issue report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueLink {
    pub sha: String,
    pub issue_id: u64,
}

fn issue_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"(?i)bug[ \t]*#?[ \t]*([0-9]{3,9})").expect("valid pattern"))
}

/// Issue numbers mentioned as `bug NNN` / `Bug #NNN` (3 to 9 digits), in order
/// of appearance and without repeats.
pub fn extract_issue_ids(message: &str) -> Vec<u64> {
    let mut seen = BTreeSet::new();
    issue_pattern()
        .captures_iter(message)
        .filter_map(|c| c[1].parse::<u64>().ok())
        .filter(|&id| id >= 1 && seen.insert(id))
        .collect()
}

/// All issue links of `records`; the first link of a commit is its primary one.
pub fn extract_links(records: &[CommitRecord]) -> Vec<IssueLink> {
    records
        .iter()
        .flat_map(|r| {
            extract_issue_ids(&r.message)
                .into_iter()
                .map(|issue_id| IssueLink { sha: r.sha.clone(), issue_id })
        })
        .collect()
}

/// Issue id to product name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProductMap(pub BTreeMap<u64, String>);

#[derive(Debug, Error)]
pub enum ProductMapError {
    #[error("product map line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("product map line {line}: issue {issue_id} listed twice")]
    Duplicate { line: u64, issue_id: u64 },
    #[error("product map header must be `issue_id,product`")]
    Header,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Deserialize)]
struct ProductRow {
    issue_id: u64,
    product: String,
}

impl ProductMap {
    /// Reads a CSV with header `issue_id,product`.
    pub fn from_csv<R: Read>(input: R) -> Result<Self, ProductMapError> {
        let mut reader = csv::Reader::from_reader(input);
        if reader.headers()?.iter().collect::<Vec<_>>() != ["issue_id", "product"] {
            return Err(ProductMapError::Header);
        }
        let mut map = BTreeMap::new();
        for row in reader.deserialize::<ProductRow>() {
            let row = row.map_err(|e| ProductMapError::Row {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            if map.insert(row.issue_id, row.product).is_some() {
                return Err(ProductMapError::Duplicate { line: map.len() as u64 + 1, issue_id: row.issue_id });
            }
        }
        Ok(Self(map))
    }
}

/// How many commits survived each stage of [`filter_by_products`].
///
/// `total = unlinked + unmapped + other_product + kept`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCounts {
    pub total: usize,
    pub linked: usize,
    pub unlinked: usize,
    /// Linked to an issue that is absent from the product map.
    pub unmapped: usize,
    pub other_product: usize,
    pub kept: usize,
}

/// Keeps commits whose primary issue link maps to an allowed product.
pub fn filter_by_products(
    records: &[CommitRecord],
    links: &[IssueLink],
    map: &ProductMap,
    allowed: &BTreeSet<String>,
) -> (Vec<CommitRecord>, LinkCounts) {
    let mut primary: HashMap<&str, u64> = HashMap::new();
    for link in links {
        primary.entry(link.sha.as_str()).or_insert(link.issue_id);
    }
    let mut counts = LinkCounts { total: records.len(), ..LinkCounts::default() };
    let mut kept = Vec::new();
    for record in records {
        let Some(issue) = primary.get(record.sha.as_str()) else {
            counts.unlinked += 1;
            continue;
        };
        counts.linked += 1;
        match map.0.get(issue) {
            None => counts.unmapped += 1,
            Some(product) if allowed.contains(product) => {
                counts.kept += 1;
                kept.push(record.clone());
            }
            Some(_) => counts.other_product += 1,
        }
    }
    (kept, counts)
}
