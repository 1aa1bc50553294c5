//! Command failures and their exit codes.

use std::fmt;
use std::io;
use std::path::Path;

use paydev_core::eval::EvalError;
use paydev_core::features::FeatureError;
use paydev_core::identity::IdentityError;
use paydev_core::ingest::{CanonicalError, IngestError};
use paydev_core::labels::LabelError;
use paydev_core::linkage::ProductMapError;
use paydev_core::ml::MlError;

/// Exit codes: 1 usage or configuration, 2 missing file or I/O failure,
/// 3 parse or schema violation, 4 column mismatch between a model and its
/// input, 5 labels with a single class, 6 more folds than the minority
/// class has members.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Usage = 1,
    Io = 2,
    Schema = 3,
    ColumnMismatch = 4,
    SingleClass = 5,
    TooManyFolds = 6,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Usage, message)
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Schema, message)
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        Self::new(ExitCode::Io, format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with the file it concerns.
    pub fn in_file(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.code {
            ExitCode::Usage => "usage",
            ExitCode::Io => "io",
            ExitCode::Schema => "schema",
            ExitCode::ColumnMismatch => "column-mismatch",
            ExitCode::SingleClass => "single-class",
            ExitCode::TooManyFolds => "too-many-folds",
        };
        write!(f, "error[{kind}]: {}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<MlError> for CliError {
    fn from(e: MlError) -> Self {
        let code = match e {
            MlError::ColumnMismatch { .. } => ExitCode::ColumnMismatch,
            MlError::SingleClass => ExitCode::SingleClass,
            MlError::InvalidData(_) | MlError::ModelFile(_) => ExitCode::Schema,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let message = e.to_string();
        match e {
            EvalError::Ml(inner) => inner.into(),
            EvalError::Fold { source, .. } => CliError::new(CliError::from(source).code, message),
            EvalError::SingleClass => CliError::new(ExitCode::SingleClass, message),
            EvalError::TooManyFolds { .. } => CliError::new(ExitCode::TooManyFolds, message),
            _ => CliError::schema(message),
        }
    }
}

macro_rules! schema_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::schema(e.to_string())
            }
        }
    )*};
}

schema_errors!(FeatureError, IdentityError, IngestError, LabelError, ProductMapError);

impl From<CanonicalError> for CliError {
    fn from(e: CanonicalError) -> Self {
        match e {
            CanonicalError::Io(io) => CliError::new(ExitCode::Io, io.to_string()),
            other => CliError::schema(other.to_string()),
        }
    }
}
