//! Developer identity merging.
//!
//! Author aliases are nodes of a bipartite graph (distinct names on one side,
//! distinct emails on the other) with one edge per observed (name, email)
//! pair. Connected components are developers. A manual override file can then
//! force extra merges or detach aliases into their own identity.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::CommitRecord;

/// A merged developer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    /// Smallest member email, or smallest name when no email is known.
    pub id: String,
    pub names: BTreeSet<String>,
    pub emails: BTreeSet<String>,
    pub commit_shas: BTreeSet<String>,
}

impl Identity {
    pub fn alias_count(&self) -> usize {
        self.names.len() + self.emails.len()
    }

    pub fn commit_count(&self) -> usize {
        self.commit_shas.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverrideKind {
    Merge,
    Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverrideRule {
    pub kind: OverrideKind,
    /// Names or emails.
    pub keys: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentityError {
    #[error("overrides line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("override key {key:?} appears in both a merge and a split rule")]
    Conflict { key: String },
}

/// Parses an overrides file: `merge key1|key2|...` or `split key1|...`, one
/// rule per line, `#` starting a comment.
pub fn parse_overrides(text: &str) -> Result<Vec<OverrideRule>, IdentityError> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |reason: &str| IdentityError::Syntax { line: i + 1, reason: reason.to_string() };
        let (verb, rest) = line.split_once(char::is_whitespace).ok_or_else(|| syntax("missing keys"))?;
        let kind = match verb {
            "merge" => OverrideKind::Merge,
            "split" => OverrideKind::Split,
            _ => return Err(syntax("rule must start with `merge` or `split`")),
        };
        let keys: Vec<String> = rest.split('|').map(|k| k.trim().to_string()).collect();
        if keys.iter().any(String::is_empty) {
            return Err(syntax("empty key"));
        }
        rules.push(OverrideRule { kind, keys });
    }
    Ok(rules)
}

/// Trims and collapses internal whitespace runs to one space.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Alias<'a> {
    Name(&'a str),
    Email(&'a str),
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
    }
}

/// Outcome of [`merge_identities`]: identities sorted by id, plus warnings for
/// override keys that matched nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeOutcome {
    pub identities: Vec<Identity>,
    pub warnings: Vec<String>,
}

/// Groups commits into identities.
///
/// Split rules are applied first: every commit whose name or email matches a
/// key of a split rule is detached into that rule's identity (first matching
/// rule wins). The remaining commits are grouped by connected components on
/// shared names or emails, and merge rules then union components.
pub fn merge_identities(
    records: &[CommitRecord],
    overrides: &[OverrideRule],
) -> Result<MergeOutcome, IdentityError> {
    check_conflicts(overrides)?;
    let mut warnings = Vec::new();

    let normalized: Vec<String> = records.iter().map(|r| normalize_name(&r.author_name)).collect();
    let aliases: Vec<(Option<Alias<'_>>, Option<Alias<'_>>)> = records
        .iter()
        .zip(&normalized)
        .map(|(record, name)| {
            let email = record.author_email.as_str();
            let email = (!email.is_empty()).then_some(Alias::Email(email));
            // commits with neither a name nor an email still need a node
            let name = (!name.is_empty() || email.is_none()).then_some(Alias::Name(name.as_str()));
            (name, email)
        })
        .collect();
    let aliases_of = |i: usize| aliases[i];
    let matches_key = |i: usize, key: &str| {
        let (name, email) = aliases_of(i);
        name == Some(Alias::Name(&normalize_name(key)))
            || email == Some(Alias::Email(&key.to_lowercase()))
    };

    let splits: Vec<&OverrideRule> = overrides.iter().filter(|r| r.kind == OverrideKind::Split).collect();
    let mut split_of: Vec<Option<usize>> = vec![None; records.len()];
    for (i, slot) in split_of.iter_mut().enumerate() {
        *slot = splits.iter().position(|rule| rule.keys.iter().any(|k| matches_key(i, k)));
    }
    for rule in &splits {
        for key in &rule.keys {
            if !(0..records.len()).any(|i| matches_key(i, key)) {
                warnings.push(format!("split key {key:?} was never observed"));
            }
        }
    }

    let mut node_index: HashMap<Alias<'_>, usize> = HashMap::new();
    let mut edges = Vec::new();
    for i in (0..records.len()).filter(|&i| split_of[i].is_none()) {
        let (name, email) = aliases_of(i);
        let ids: Vec<usize> = [name, email]
            .into_iter()
            .flatten()
            .map(|alias| {
                let next = node_index.len();
                *node_index.entry(alias).or_insert(next)
            })
            .collect();
        edges.push(ids);
    }
    let mut sets = DisjointSet::new(node_index.len());
    for ids in &edges {
        if let [a, b] = ids.as_slice() {
            sets.union(*a, *b);
        }
    }
    for rule in overrides.iter().filter(|r| r.kind == OverrideKind::Merge) {
        let mut present = Vec::new();
        for key in &rule.keys {
            let name = normalize_name(key);
            let email = key.to_lowercase();
            let found: Vec<usize> = [Alias::Name(&name), Alias::Email(&email)]
                .iter()
                .filter_map(|a| node_index.get(a).copied())
                .collect();
            if found.is_empty() {
                warnings.push(format!("merge key {key:?} was never observed"));
            }
            present.extend(found);
        }
        for pair in present.windows(2) {
            sets.union(pair[0], pair[1]);
        }
    }

    // group commits: automatic components keyed by root node, splits by rule
    #[derive(PartialEq, Eq, PartialOrd, Ord)]
    enum Group {
        Component(usize),
        Split(usize),
    }
    let mut groups: BTreeMap<Group, Vec<usize>> = BTreeMap::new();
    for (i, split) in split_of.iter().enumerate() {
        let group = match *split {
            Some(rule) => Group::Split(rule),
            None => {
                let (name, email) = aliases_of(i);
                let node = node_index[&name.or(email).expect("every commit has an alias")];
                Group::Component(sets.find(node))
            }
        };
        groups.entry(group).or_default().push(i);
    }

    let mut identities: Vec<Identity> = groups
        .into_values()
        .map(|members| {
            let mut identity = Identity {
                id: String::new(),
                names: BTreeSet::new(),
                emails: BTreeSet::new(),
                commit_shas: BTreeSet::new(),
            };
            for i in members {
                let (name, email) = aliases_of(i);
                if let Some(Alias::Name(n)) = name {
                    identity.names.insert(n.to_string());
                }
                if let Some(Alias::Email(e)) = email {
                    identity.emails.insert(e.to_string());
                }
                identity.commit_shas.insert(records[i].sha.clone());
            }
            identity.id = identity
                .emails
                .first()
                .or(identity.names.first())
                .cloned()
                .unwrap_or_default();
            identity
        })
        .collect();

    // split identities may share their smallest alias with another identity
    identities.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.commit_shas.cmp(&b.commit_shas)));
    let mut used: BTreeSet<String> = BTreeSet::new();
    for identity in &mut identities {
        if !used.insert(identity.id.clone()) {
            let base = identity.id.clone();
            let mut n = 2;
            while !used.insert(format!("{base}~{n}")) {
                n += 1;
            }
            identity.id = format!("{base}~{n}");
        }
    }
    identities.sort_by(|a, b| a.id.cmp(&b.id));

    for w in &warnings {
        warn!("{w}");
    }
    Ok(MergeOutcome { identities, warnings })
}

fn check_conflicts(overrides: &[OverrideRule]) -> Result<(), IdentityError> {
    let keys_of = |kind| -> BTreeSet<String> {
        overrides
            .iter()
            .filter(|r| r.kind == kind)
            .flat_map(|r| r.keys.iter().map(|k| override_key(k)))
            .collect()
    };
    let merged = keys_of(OverrideKind::Merge);
    match keys_of(OverrideKind::Split).intersection(&merged).next() {
        Some(key) => Err(IdentityError::Conflict { key: key.clone() }),
        None => Ok(()),
    }
}

fn override_key(key: &str) -> String {
    if key.contains('@') {
        key.trim().to_lowercase()
    } else {
        normalize_name(key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub id: String,
    pub aliases: usize,
    pub commits: usize,
}

/// Per-identity alias and commit counts, by commit count descending then id.
pub fn identity_report(identities: &[Identity]) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = identities
        .iter()
        .map(|i| ReportRow { id: i.id.clone(), aliases: i.alias_count(), commits: i.commit_count() })
        .collect();
    rows.sort_by(|a, b| b.commits.cmp(&a.commits).then_with(|| a.id.cmp(&b.id)));
    rows
}

pub fn render_report(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.id.chars().count()).max().unwrap_or(0).max("identity".len());
    let mut out = format!("{:<width$}  {:>7}  {:>7}\n", "identity", "aliases", "commits");
    for row in rows {
        out.push_str(&format!("{:<width$}  {:>7}  {:>7}\n", row.id, row.aliases, row.commits));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn commit(n: usize, name: &str, email: &str) -> CommitRecord {
        CommitRecord {
            sha: format!("{n:040x}"),
            author_name: name.into(),
            author_email: email.into(),
            timestamp_utc: n as i64,
            tz_offset_minutes: 0,
            lines_added: 0,
            lines_deleted: 0,
            message: String::new(),
        }
    }

    fn partition(identities: &[Identity]) -> BTreeSet<BTreeSet<String>> {
        identities.iter().map(|i| i.commit_shas.clone()).collect()
    }

    #[test]
    fn groups_on_shared_name() {
        let records = vec![
            commit(1, "Alice", "a@x.com"),
            commit(2, "Alice", "alice@y.org"),
            commit(3, "Bob", "b@x.com"),
        ];
        let out = merge_identities(&records, &[]).unwrap();
        assert_eq!(out.identities.len(), 2);
        let alice = &out.identities[0];
        assert_eq!(alice.id, "a@x.com");
        assert_eq!(alice.emails.iter().collect::<Vec<_>>(), ["a@x.com", "alice@y.org"]);
        assert_eq!(out.identities[1].id, "b@x.com");
    }

    #[test]
    fn empty_input() {
        let out = merge_identities(&[], &[]).unwrap();
        assert!(out.identities.is_empty());
        assert!(render_report(&identity_report(&out.identities)).lines().count() == 1);
    }

    #[test]
    fn split_detaches_chained_alias() {
        let records = vec![commit(1, "N1", "a@x"), commit(2, "N1", "b@y"), commit(3, "N2", "b@y")];
        assert_eq!(merge_identities(&records, &[]).unwrap().identities.len(), 1);
        let rules = parse_overrides("# manual check\nsplit N2\n").unwrap();
        let out = merge_identities(&records, &rules).unwrap();
        assert_eq!(out.identities.len(), 2);
        let alone: BTreeSet<String> = [format!("{:040x}", 3)].into();
        assert!(partition(&out.identities).contains(&alone));
        let ids: BTreeSet<_> = out.identities.iter().map(|i| i.id.clone()).collect();
        assert_eq!(ids.len(), 2);
    }

    #[test]
    fn merge_rule_unions_components() {
        let records = vec![commit(1, "Alice", "a@x"), commit(2, "A. Smith", "smith@y")];
        let rules = parse_overrides("merge a@x | A. Smith  # same person").unwrap();
        let out = merge_identities(&records, &rules).unwrap();
        assert_eq!(out.identities.len(), 1);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn unseen_override_keys_warn() {
        let records = vec![commit(1, "Alice", "a@x")];
        let rules = parse_overrides("split ghost\nmerge nobody|a@x").unwrap();
        let out = merge_identities(&records, &rules).unwrap();
        assert_eq!(out.warnings.len(), 2);
        assert_eq!(out.identities.len(), 1);
    }

    #[test]
    fn conflicting_rules_error() {
        let rules = parse_overrides("merge Alice|bob@x\nsplit  Alice  ").unwrap();
        assert!(matches!(merge_identities(&[], &rules), Err(IdentityError::Conflict { .. })));
    }

    #[test]
    fn override_syntax_errors() {
        assert!(parse_overrides("join a|b").is_err());
        assert!(parse_overrides("merge a||b").is_err());
        assert!(parse_overrides("merge").is_err());
        assert!(parse_overrides("\n# only comments\n").unwrap().is_empty());
    }

    #[test]
    fn names_are_whitespace_normalized() {
        let records = vec![commit(1, "  Alice   B ", "a@x"), commit(2, "Alice B", "b@y")];
        let out = merge_identities(&records, &[]).unwrap();
        assert_eq!(out.identities.len(), 1);
        assert_eq!(out.identities[0].names.iter().collect::<Vec<_>>(), ["Alice B"]);
        // case is significant
        let records = vec![commit(1, "alice", "a@x"), commit(2, "Alice", "b@y")];
        assert_eq!(merge_identities(&records, &[]).unwrap().identities.len(), 2);
    }

    #[test]
    fn missing_email_falls_back_to_name_id() {
        let records = vec![commit(1, "Nameless", ""), commit(2, "", "")];
        let out = merge_identities(&records, &[]).unwrap();
        assert_eq!(out.identities.len(), 2);
        assert_eq!(out.identities.iter().map(|i| i.id.as_str()).collect::<Vec<_>>(), ["", "Nameless"]);
    }

    #[test]
    fn report_orders_by_count_then_id() {
        let mk = |id: &str, n: usize| Identity {
            id: id.into(),
            names: [id.to_string()].into(),
            emails: BTreeSet::new(),
            commit_shas: (0..n).map(|i| format!("{id}{i}")).collect(),
        };
        let rows = identity_report(&[mk("c", 1), mk("b", 5), mk("a", 5)]);
        let order: Vec<_> = rows.iter().map(|r| (r.id.as_str(), r.commits)).collect();
        assert_eq!(order, [("a", 5), ("b", 5), ("c", 1)]);
        assert_eq!(render_report(&rows).lines().count(), 4);
    }
}
