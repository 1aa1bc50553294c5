//! The subcommands. Each returns the text meant for stdout; files named by
//! the caller are written atomically (temporary file, then rename).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::Command;

use log::info;
use paydev_core::eval::{
    evaluate_developers, generate_synthetic_corpus, labeled_dataset, per_commit_experiment, CommitExperiment,
    CommitReports, DeveloperExperiment, EvalReport,
};
use paydev_core::features::{commit_features, developer_features, feature_matrix, group_commits, FeatureMatrix, COMMIT_COLUMNS};
use paydev_core::identity::{identity_report, merge_identities, parse_overrides, render_report};
use paydev_core::ingest::{parse_git_log, read_canonical, write_canonical, GIT_EXPORT_COMMAND_WITH_MESSAGE};
use paydev_core::labels::{load_labels, resolve_all, study_filter, LabelSet};
use paydev_core::linkage::{extract_links, filter_by_products, ProductMap};
use paydev_core::ml::{Dataset, TrainedModel};
use paydev_core::{CommitRecord, Identity, Status};

use crate::config::Config;
use crate::error::{CliError, ExitCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Table,
}

/// Where developer features come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    /// A features CSV written by `features`.
    Features(PathBuf),
    /// A canonical commit file, with an identity map (merged afresh when
    /// absent).
    Commits { input: PathBuf, identities: Option<PathBuf> },
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes to `out` when given, else returns the text for stdout.
fn emit(out: Option<&Path>, text: String) -> Result<String, CliError> {
    match out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

pub fn load_records(path: &Path) -> Result<Vec<CommitRecord>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_canonical(BufReader::new(file)).map_err(|e| CliError::from(e).in_file(path))
}

fn load_identities(path: &Path) -> Result<Vec<Identity>, CliError> {
    serde_json::from_slice(&read_file(path)?).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

fn load_label_set(path: &Path) -> Result<LabelSet, CliError> {
    load_labels(read_file(path)?.as_slice()).map_err(|e| CliError::from(e).in_file(path))
}

// ---- ingest ------------------------------------------------------------------

pub struct IngestArgs<'a> {
    /// Export file; `None` reads stdin unless `repo` is set.
    pub input: Option<&'a Path>,
    /// Repository to export with the system `git`.
    pub repo: Option<&'a Path>,
    pub product_map: Option<&'a Path>,
    pub out: Option<&'a Path>,
}

fn export_repo(repo: &Path) -> Result<Vec<u8>, CliError> {
    let mut args: Vec<String> = vec!["-C".into(), repo.display().to_string()];
    // the documented command without shell quoting
    args.extend(
        GIT_EXPORT_COMMAND_WITH_MESSAGE
            .trim_start_matches("git ")
            .split(' ')
            .map(|a| a.replace('\'', "")),
    );
    let output = Command::new("git").args(&args).output().map_err(|e| CliError::io(Path::new("git"), e))?;
    if !output.status.success() {
        return Err(CliError::new(
            ExitCode::Io,
            format!("git log failed: {}", String::from_utf8_lossy(&output.stderr).trim()),
        ));
    }
    Ok(output.stdout)
}

pub fn cmd_ingest(args: &IngestArgs<'_>, config: &Config) -> Result<String, CliError> {
    let raw = match (args.input, args.repo) {
        (Some(_), Some(_)) => return Err(CliError::usage("give either an export file or --repo, not both")),
        (Some(path), None) => read_file(path)?,
        (None, Some(repo)) => export_repo(repo)?,
        (None, None) => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).map_err(|e| CliError::io(Path::new("<stdin>"), e))?;
            buf
        }
    };
    let mut records = parse_git_log(&raw)?;
    let mut summary = format!("parsed {} commits\n", records.len());
    match (args.product_map, config.products.is_empty()) {
        (Some(path), false) => {
            let map = ProductMap::from_csv(read_file(path)?.as_slice()).map_err(|e| CliError::from(e).in_file(path))?;
            let allowed: BTreeSet<String> = config.products.iter().cloned().collect();
            let links = extract_links(&records);
            let (kept, counts) = filter_by_products(&records, &links, &map, &allowed);
            summary.push_str(&format!(
                "linked {} unlinked {} unmapped {} other_product {} kept {}\n",
                counts.linked, counts.unlinked, counts.unmapped, counts.other_product, counts.kept
            ));
            records = kept;
        }
        (Some(_), true) => return Err(CliError::usage("--product-map needs a product allowlist (products=...)")),
        (None, false) => return Err(CliError::usage("a product allowlist needs --product-map")),
        (None, true) => {}
    }
    let mut bytes = Vec::new();
    write_canonical(&records, &mut bytes)?;
    match args.out {
        Some(path) => {
            write_atomic(path, &bytes)?;
            Ok(summary)
        }
        None => {
            eprint!("{summary}");
            Ok(String::from_utf8(bytes).expect("JSON is UTF-8"))
        }
    }
}

// ---- identities --------------------------------------------------------------

pub fn cmd_identities(
    input: &Path,
    overrides: Option<&Path>,
    out: Option<&Path>,
    format: Format,
) -> Result<String, CliError> {
    let records = load_records(input)?;
    let rules = match overrides {
        Some(path) => {
            let text = String::from_utf8(read_file(path)?)
                .map_err(|_| CliError::schema(format!("{}: not UTF-8", path.display())))?;
            parse_overrides(&text).map_err(|e| CliError::from(e).in_file(path))?
        }
        None => Vec::new(),
    };
    let outcome = merge_identities(&records, &rules)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    let rows = identity_report(&outcome.identities);
    let report = match format {
        Format::Table => render_report(&rows),
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| serde_json::json!({"identity": r.id, "aliases": r.aliases, "commits": r.commits}))
                .collect();
            to_json(&rows)
        }
    };
    match out {
        Some(path) => {
            write_atomic(path, to_json(&outcome.identities).as_bytes())?;
            Ok(report)
        }
        None => {
            eprint!("{report}");
            Ok(to_json(&outcome.identities))
        }
    }
}

// ---- developer pipeline ------------------------------------------------------

/// Commits and studied identities of a canonical source.
pub struct Developers {
    pub records: Vec<CommitRecord>,
    pub identities: Vec<Identity>,
}

impl Developers {
    pub fn load(input: &Path, identities: Option<&Path>, config: &Config) -> Result<Developers, CliError> {
        let records = load_records(input)?;
        let all = match identities {
            Some(path) => load_identities(path)?,
            None => merge_identities(&records, &[])?.identities,
        };
        let identities = study_filter(&all, config.min_commits);
        info!("{} of {} identities have more than {} commits", identities.len(), all.len(), config.min_commits);
        Ok(Developers { records, identities })
    }

    pub fn groups(&self) -> Vec<(String, Vec<&CommitRecord>)> {
        group_commits(&self.identities, &self.records)
    }

    pub fn matrix(&self, config: &Config) -> Result<FeatureMatrix, CliError> {
        Ok(feature_matrix(&self.groups(), config.feature_mode)?)
    }

    /// Resolved status per identity id; unlabeled identities are dropped.
    pub fn statuses(&self, labels: &LabelSet) -> BTreeMap<String, Status> {
        let groups = self.groups();
        let by_id: BTreeMap<&str, &Identity> = self.identities.iter().map(|i| (i.id.as_str(), i)).collect();
        let pairs: Vec<(&Identity, Vec<&CommitRecord>)> =
            groups.iter().map(|(id, commits)| (by_id[id.as_str()], commits.clone())).collect();
        let (resolved, summary) = resolve_all(&pairs, labels);
        eprintln!(
            "labels: {} hired, {} volunteer, {} unlabeled",
            summary.hired, summary.volunteer, summary.unlabeled
        );
        resolved
    }
}

/// Feature table, statuses and (for canonical sources) commits by identity.
struct Prepared {
    matrix: FeatureMatrix,
    statuses: BTreeMap<String, Status>,
    developers: Option<Developers>,
}

fn prepare(source: &Source, labels: &Path, config: &Config) -> Result<Prepared, CliError> {
    let label_set = load_label_set(labels)?;
    match source {
        Source::Features(path) => {
            let matrix = FeatureMatrix::read_csv(read_file(path)?.as_slice()).map_err(|e| CliError::from(e).in_file(path))?;
            // without identities only direct statuses can be used
            let statuses = matrix.ids.iter().filter_map(|id| label_set.entries.get(id).map(|s| (id.clone(), *s))).collect();
            Ok(Prepared { matrix, statuses, developers: None })
        }
        Source::Commits { input, identities } => {
            let developers = Developers::load(input, identities.as_deref(), config)?;
            let matrix = developers.matrix(config)?;
            let statuses = developers.statuses(&label_set);
            Ok(Prepared { matrix, statuses, developers: Some(developers) })
        }
    }
}

fn check_classes(data: &Dataset) -> Result<(), CliError> {
    match data.class_counts() {
        (0, _) | (_, 0) => Err(CliError::new(
            ExitCode::SingleClass,
            format!("{} labeled developers, all of one class", data.len()),
        )),
        _ => Ok(()),
    }
}

// ---- features ----------------------------------------------------------------

pub fn cmd_features(input: &Path, identities: Option<&Path>, config: &Config, out: Option<&Path>) -> Result<String, CliError> {
    let matrix = Developers::load(input, identities, config)?.matrix(config)?;
    let mut bytes = Vec::new();
    matrix.write_csv(&mut bytes)?;
    emit(out, String::from_utf8(bytes).expect("CSV is UTF-8"))
}

// ---- evaluate ----------------------------------------------------------------

fn render_eval(report: &EvalReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Table => report.render_table(),
    }
}

pub fn run_evaluate(source: &Source, labels: &Path, config: &Config) -> Result<EvalReport, CliError> {
    let prepared = prepare(source, labels, config)?;
    let data = labeled_dataset(&prepared.matrix, &prepared.statuses, config.feature_mode)?;
    check_classes(&data)?;
    let experiment = DeveloperExperiment {
        seed: config.seed,
        folds: config.folds,
        repeats: config.repeats,
        feature_mode: config.feature_mode,
        classifiers: config.classifiers(),
        baselines: config.baselines(),
    };
    let commits: Option<BTreeMap<String, Vec<&CommitRecord>>> =
        prepared.developers.as_ref().map(|d| d.groups().into_iter().collect());
    Ok(evaluate_developers(&data, commits.as_ref(), &experiment)?)
}

pub fn cmd_evaluate(
    source: &Source,
    labels: &Path,
    config: &Config,
    out: Option<&Path>,
    format: Format,
) -> Result<String, CliError> {
    let report = run_evaluate(source, labels, config)?;
    emit(out, render_eval(&report, format))
}

// ---- train / predict ---------------------------------------------------------

pub fn cmd_train(
    source: &Source,
    labels: &Path,
    classifier: &str,
    config: &Config,
    out: &Path,
) -> Result<String, CliError> {
    let spec = config.classifier(classifier)?;
    let prepared = prepare(source, labels, config)?;
    let data = labeled_dataset(&prepared.matrix, &prepared.statuses, config.feature_mode)?;
    check_classes(&data)?;
    let model = spec.fit(&data, config.seed)?;
    let mut bytes = Vec::new();
    model.write(&mut bytes)?;
    write_atomic(out, &bytes)?;
    Ok(model.introspect())
}

pub fn cmd_predict(model: &Path, source: &Source, config: &Config, out: Option<&Path>) -> Result<String, CliError> {
    let model = TrainedModel::read(read_file(model)?.as_slice()).map_err(|e| CliError::from(e).in_file(model))?;
    let commit_model = model.columns.iter().map(String::as_str).eq(COMMIT_COLUMNS);
    let (key, ids, columns, rows) = match source {
        Source::Features(path) => {
            let m = FeatureMatrix::read_csv(read_file(path)?.as_slice()).map_err(|e| CliError::from(e).in_file(path))?;
            ("identity", m.ids, m.columns, m.rows)
        }
        Source::Commits { input, identities } if commit_model => {
            let developers = Developers::load(input, identities.as_deref(), config)?;
            let mut ids = Vec::new();
            let mut rows = Vec::new();
            for (_, commits) in developers.groups() {
                let aggregates = developer_features(commits.iter().copied())?;
                for f in commit_features(commits.iter().copied(), &aggregates) {
                    ids.push(f.sha.clone());
                    rows.push(f.values());
                }
            }
            ("sha", ids, COMMIT_COLUMNS.map(String::from).to_vec(), rows)
        }
        Source::Commits { input, identities } => {
            let m = Developers::load(input, identities.as_deref(), config)?.matrix(config)?;
            ("identity", m.ids, m.columns, m.rows)
        }
    };
    let probabilities = model.predict_proba(&columns, &rows)?;
    let mut text = format!("{key},probability,class\n");
    for (id, p) in ids.iter().zip(probabilities) {
        let class = if p >= 0.5 { Status::Hired } else { Status::Volunteer };
        text.push_str(&format!("{id},{p:.6},{class}\n"));
    }
    emit(out, text)
}

// ---- commits -----------------------------------------------------------------

pub fn run_commits(
    input: &Path,
    identities: Option<&Path>,
    labels: &Path,
    config: &Config,
) -> Result<CommitReports, CliError> {
    let label_set = load_label_set(labels)?;
    let records = load_records(input)?;
    let identities = match identities {
        Some(path) => load_identities(path)?,
        None => merge_identities(&records, &[])?.identities,
    };
    let groups = group_commits(&identities, &records);
    let by_id: BTreeMap<&str, &Identity> = identities.iter().map(|i| (i.id.as_str(), i)).collect();
    let pairs: Vec<(&Identity, Vec<&CommitRecord>)> =
        groups.into_iter().map(|(id, commits)| (by_id[id.as_str()], commits)).collect();
    let experiment = CommitExperiment {
        coverage: config.coverage,
        email_domains: config.email_domains.clone(),
        seed: config.seed,
    };
    Ok(per_commit_experiment(&pairs, &label_set, &config.classifiers(), &experiment)?)
}

pub fn cmd_commits(
    input: &Path,
    identities: Option<&Path>,
    labels: &Path,
    config: &Config,
    out: Option<&Path>,
    format: Format,
) -> Result<String, CliError> {
    let reports = run_commits(input, identities, labels, config)?;
    let text = match format {
        Format::Json => to_json(&reports),
        Format::Table => format!(
            "training developers: {}\n\nall commits\n{}\ncommits of the remaining developers\n{}",
            reports.training_developers.len(),
            reports.all.render_table(),
            reports.held_out.render_table()
        ),
    };
    emit(out, text)
}

// ---- synth -------------------------------------------------------------------

pub fn cmd_synth(config: &Config, out: &Path, labels_out: &Path) -> Result<String, CliError> {
    let corpus = generate_synthetic_corpus(&config.synth, config.seed);
    let mut bytes = Vec::new();
    write_canonical(&corpus.records, &mut bytes)?;
    write_atomic(out, &bytes)?;
    write_atomic(labels_out, corpus.labels_csv().as_bytes())?;
    let hired = corpus.labels.iter().filter(|l| l.1.is_hired()).count();
    Ok(format!(
        "{} commits by {} developers ({} hired, {} volunteer)\n",
        corpus.records.len(),
        corpus.labels.len(),
        hired,
        corpus.labels.len() - hired
    ))
}
