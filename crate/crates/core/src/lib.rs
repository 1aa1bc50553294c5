//! Commit-history mining toolkit for telling paid contributors from volunteers.
//!
//! The pipeline runs in stages, one module each:
//!
//! - [`ingest`]: parse `git log` exports into [`CommitRecord`]s and read/write
//!   the canonical JSON-lines format.
//! - [`linkage`]: pull issue identifiers out of commit messages and keep only
//!   commits whose issue belongs to an allowed product.
//! - [`identity`]: merge author aliases into developer identities.
//! - [`features`]: the 16 per-developer activity metrics and per-commit vectors.
//! - [`labels`]: ground-truth employment status, the study filter and
//!   mixed-status resolution.
//! - [`ml`]: logistic regression, CART and random forest classifiers.
//! - [`eval`]: ROC AUC, precision/recall, stratified cross-validation,
//!   heuristic baselines, the per-commit experiment and a synthetic corpus
//!   generator.

pub mod eval;
pub mod features;
pub mod identity;
pub mod ingest;
pub mod labels;
pub mod linkage;
pub mod ml;
pub mod rng;

pub use features::{DeveloperFeatures, FeatureMode};
pub use identity::Identity;
pub use ingest::{CommitRecord, LocalTime};
pub use labels::{LabelSet, Status};
