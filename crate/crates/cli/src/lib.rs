//! The `paydev` command line: argument parsing, configuration layering and
//! dispatch to the subcommands.
//!
//! Settings come from built-in defaults, then `--config FILE`, then
//! `--set key=value` and the dedicated flags, later sources winning. Every
//! command prints the resulting configuration to stderr before running.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paydev_core::ingest::{GIT_EXPORT_COMMAND, GIT_EXPORT_COMMAND_WITH_MESSAGE};

use commands::{Format, IngestArgs, Source};
use config::Config;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "paydev", version, about = "Tell paid developers from volunteers by their commit activity")]
struct Cli {
    /// Configuration file of `key=value` lines (`#` comments).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Override any configuration key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Table,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Features CSV written by `paydev features`.
    #[arg(long, conflicts_with_all = ["input", "identities"], required_unless_present = "input")]
    features: Option<PathBuf>,
    /// Canonical commit file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Identity map written by `paydev identities` (merged afresh when absent).
    #[arg(long, requires = "input")]
    identities: Option<PathBuf>,
}

impl SourceArgs {
    fn source(&self) -> Source {
        match &self.features {
            Some(path) => Source::Features(path.clone()),
            None => Source::Commits {
                input: self.input.clone().expect("clap requires one source"),
                identities: self.identities.clone(),
            },
        }
    }
}

fn ingest_help() -> String {
    format!(
        "Export a repository with:\n  {GIT_EXPORT_COMMAND}\n\nor, keeping commit messages for issue linking:\n  {GIT_EXPORT_COMMAND_WITH_MESSAGE}"
    )
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Parse a `git log` export into the canonical commit file.
    #[command(after_help = ingest_help())]
    Ingest {
        /// Export file; stdin when absent.
        input: Option<PathBuf>,
        /// Run the export in this repository with the system `git`.
        #[arg(long, conflicts_with = "input")]
        repo: Option<PathBuf>,
        /// CSV `issue_id,product` for product filtering.
        #[arg(long)]
        product_map: Option<PathBuf>,
        /// Allowed products, comma-separated.
        #[arg(long)]
        products: Option<String>,
    },
    /// Merge author aliases into identities; --out receives the identity map.
    Identities {
        input: PathBuf,
        /// Override rules: `merge a|b` or `split a|b` per line.
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    /// Compute the per-developer metrics as CSV.
    Features {
        input: PathBuf,
        #[arg(long)]
        identities: Option<PathBuf>,
        /// all or no_volume.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        min_commits: Option<String>,
    },
    /// Cross-validate logit, rpart and randomforest and score the baselines.
    Evaluate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        folds: Option<String>,
        #[arg(long)]
        repeats: Option<String>,
    },
    /// Fit one classifier on all labeled developers and save it to --out.
    Train {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        labels: PathBuf,
        /// logit, rpart or randomforest.
        #[arg(long)]
        classifier: String,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Apply a saved model; writes `id,probability,class` CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Train on the most active developers' commits, score single commits.
    Commits {
        input: PathBuf,
        #[arg(long)]
        identities: Option<PathBuf>,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        coverage: Option<String>,
    },
    /// Generate a synthetic corpus: canonical commits to --out, labels CSV to --labels.
    Synth {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        developers: Option<String>,
        /// separable, overlapping or weekend_separable.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        hired_share: Option<String>,
    },
}

impl Cmd {
    /// Dedicated flags as configuration overrides.
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs: Vec<(&'static str, &Option<String>)> = match self {
            Cmd::Ingest { products, .. } => vec![("products", products)],
            Cmd::Features { mode, min_commits, .. } => vec![("feature_mode", mode), ("min_commits", min_commits)],
            Cmd::Evaluate { mode, folds, repeats, .. } => {
                vec![("feature_mode", mode), ("folds", folds), ("repeats", repeats)]
            }
            Cmd::Train { mode, .. } => vec![("feature_mode", mode)],
            Cmd::Commits { coverage, .. } => vec![("coverage", coverage)],
            Cmd::Synth { developers, profile, hired_share, .. } => vec![
                ("synth.developers", developers),
                ("synth.profile", profile),
                ("synth.hired_share", hired_share),
            ],
            Cmd::Identities { .. } | Cmd::Predict { .. } => vec![],
        };
        pairs.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

fn build_config(cli: &Cli) -> Result<Config, CliError> {
    let mut config = Config::default();
    if let Some(path) = &cli.config {
        let text = String::from_utf8(commands::read_file(path)?)
            .map_err(|_| CliError::usage(format!("{}: not UTF-8", path.display())))?;
        config.apply_text(&text).map_err(|e| e.in_file(path))?;
    }
    for pair in &cli.set {
        let (key, value) =
            pair.split_once('=').ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        config.set(key.trim(), value)?;
    }
    for (key, value) in cli.command.overrides() {
        config.set(key, value)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn dispatch(cli: &Cli, config: &Config) -> Result<String, CliError> {
    let out = cli.out.as_deref();
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Table => Format::Table,
    };
    let required_out = || out.ok_or_else(|| CliError::usage("--out is required for this command"));
    match &cli.command {
        Cmd::Ingest { input, repo, product_map, .. } => commands::cmd_ingest(
            &IngestArgs { input: input.as_deref(), repo: repo.as_deref(), product_map: product_map.as_deref(), out },
            config,
        ),
        Cmd::Identities { input, overrides } => commands::cmd_identities(input, overrides.as_deref(), out, format),
        Cmd::Features { input, identities, .. } => commands::cmd_features(input, identities.as_deref(), config, out),
        Cmd::Evaluate { source, labels, .. } => commands::cmd_evaluate(&source.source(), labels, config, out, format),
        Cmd::Train { source, labels, classifier, .. } => {
            commands::cmd_train(&source.source(), labels, classifier, config, required_out()?)
        }
        Cmd::Predict { model, source } => commands::cmd_predict(model, &source.source(), config, out),
        Cmd::Commits { input, identities, labels, .. } => {
            commands::cmd_commits(input, identities.as_deref(), labels, config, out, format)
        }
        Cmd::Synth { labels, .. } => commands::cmd_synth(config, required_out()?, labels),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { error::ExitCode::Usage as i32 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let result = build_config(&cli).and_then(|config| {
        eprint!("# paydev configuration\n{config}");
        dispatch(&cli, &config)
    });
    match result {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.code as i32
        }
    }
}
