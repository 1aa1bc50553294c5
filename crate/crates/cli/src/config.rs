//! Experiment configuration: defaults, the `key=value` file format and the
//! echo printed by every command.

use std::fmt;
use std::str::FromStr;

use paydev_core::eval::{BaselineSpec, Profile, SynthSpec, DEFAULT_EMAIL_DOMAINS};
use paydev_core::ml::{ClassifierSpec, ForestParams, LogitParams, TreeParams};
use paydev_core::FeatureMode;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    /// Developers need strictly more commits than this to be studied.
    pub min_commits: usize,
    pub feature_mode: FeatureMode,
    pub folds: usize,
    pub repeats: usize,
    pub logit: LogitParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub email_domains: Vec<String>,
    pub coverage: f64,
    /// Empty means no product filtering.
    pub products: Vec<String>,
    pub synth: SynthSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 1,
            min_commits: 100,
            feature_mode: FeatureMode::All,
            folds: 10,
            repeats: 10,
            logit: LogitParams::default(),
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            email_domains: DEFAULT_EMAIL_DOMAINS.map(String::from).to_vec(),
            coverage: 0.5,
            products: Vec::new(),
            synth: SynthSpec::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::usage(format!("config key {key}: cannot parse {value:?}")))
}

fn positive<T: FromStr + PartialOrd + Default>(key: &str, value: &str) -> Result<T, CliError> {
    let v: T = parse(key, value)?;
    if v > T::default() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("config key {key}: must be positive, got {value}")))
    }
}

fn list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn fraction(key: &str, value: &str, upper_inclusive: bool) -> Result<f64, CliError> {
    let v: f64 = parse(key, value)?;
    let ok = v > 0.0 && (v < 1.0 || (upper_inclusive && v == 1.0));
    if ok {
        Ok(v)
    } else {
        Err(CliError::usage(format!("config key {key}: {value} outside the allowed range")))
    }
}

impl Config {
    /// Applies one setting; used for both file lines and flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "seed" => self.seed = parse(key, value)?,
            "min_commits" => self.min_commits = positive(key, value)?,
            "feature_mode" => self.feature_mode = value.parse().map_err(CliError::usage)?,
            "folds" => self.folds = positive(key, value)?,
            "repeats" => self.repeats = positive(key, value)?,
            "logit.l2" => self.logit.l2 = parse(key, value)?,
            "logit.max_iter" => self.logit.max_iter = positive(key, value)?,
            "logit.tol" => self.logit.tol = positive(key, value)?,
            "tree.minsplit" => self.tree.minsplit = positive(key, value)?,
            "tree.cp" => self.tree.cp = parse(key, value)?,
            "tree.maxdepth" => self.tree.maxdepth = positive(key, value)?,
            "forest.trees" => self.forest.trees = positive(key, value)?,
            "forest.mtry" => {
                self.forest.mtry = if value == "auto" { None } else { Some(positive(key, value)?) }
            }
            "email_domains" => self.email_domains = list(value),
            "coverage" => self.coverage = fraction(key, value, true)?,
            "products" => self.products = list(value),
            "synth.developers" => self.synth.developers = positive(key, value)?,
            "synth.hired_share" => self.synth.hired_share = fraction(key, value, false)?,
            "synth.profile" => self.synth.profile = value.parse::<Profile>().map_err(CliError::usage)?,
            "synth.min_commits" => self.synth.min_commits = positive(key, value)?,
            "synth.max_commits" => self.synth.max_commits = positive(key, value)?,
            other => return Err(CliError::usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key=value", i + 1)))?;
            self.set(key.trim(), value)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.folds < 2 {
            return Err(CliError::usage("folds must be at least 2"));
        }
        if self.tree.cp.is_nan() || self.tree.cp < 0.0 || self.logit.l2.is_nan() || self.logit.l2 < 0.0 {
            return Err(CliError::usage("tree.cp and logit.l2 must be non-negative"));
        }
        if self.email_domains.is_empty() {
            return Err(CliError::usage("email_domains must not be empty"));
        }
        if self.synth.min_commits > self.synth.max_commits {
            return Err(CliError::usage("synth.min_commits exceeds synth.max_commits"));
        }
        Ok(())
    }

    /// logit, rpart and randomforest with the configured parameters.
    pub fn classifiers(&self) -> Vec<ClassifierSpec> {
        vec![
            ClassifierSpec::Logit(self.logit.clone()),
            ClassifierSpec::Tree(self.tree.clone()),
            ClassifierSpec::Forest(self.forest.clone()),
        ]
    }

    pub fn classifier(&self, name: &str) -> Result<ClassifierSpec, CliError> {
        self.classifiers()
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| CliError::usage(format!("unknown classifier {name:?} (logit, rpart, randomforest)")))
    }

    pub fn baselines(&self) -> Vec<BaselineSpec> {
        BaselineSpec::presets(&self.email_domains)
    }
}

/// The echo: every setting as `key=value`, one per line.
impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mtry = self.forest.mtry.map_or("auto".to_string(), |m| m.to_string());
        let pairs: [(&str, String); 21] = [
            ("seed", self.seed.to_string()),
            ("min_commits", self.min_commits.to_string()),
            ("feature_mode", self.feature_mode.to_string()),
            ("folds", self.folds.to_string()),
            ("repeats", self.repeats.to_string()),
            ("logit.l2", self.logit.l2.to_string()),
            ("logit.max_iter", self.logit.max_iter.to_string()),
            ("logit.tol", self.logit.tol.to_string()),
            ("tree.minsplit", self.tree.minsplit.to_string()),
            ("tree.cp", self.tree.cp.to_string()),
            ("tree.maxdepth", self.tree.maxdepth.to_string()),
            ("forest.trees", self.forest.trees.to_string()),
            ("forest.mtry", mtry),
            ("email_domains", self.email_domains.join(",")),
            ("coverage", self.coverage.to_string()),
            ("products", self.products.join(",")),
            ("synth.developers", self.synth.developers.to_string()),
            ("synth.hired_share", self.synth.hired_share.to_string()),
            ("synth.profile", self.synth.profile.to_string()),
            ("synth.min_commits", self.synth.min_commits.to_string()),
            ("synth.max_commits", self.synth.max_commits.to_string()),
        ];
        for (k, v) in pairs {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
