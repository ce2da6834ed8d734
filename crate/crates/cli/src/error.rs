use std::path::PathBuf;

use ffno_core::container::FormatError;
use ffno_core::dataset::DatasetError;
use ffno_core::evaluation::EvalError;
use ffno_core::ffno::FfnoError;
use ffno_core::solver::SolverError;
use ffno_core::training::TrainError;

/// Failure of a command. Every variant has its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("no such file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    BlowUp(String),
    #[error("non-finite loss at step {0}")]
    NonFiniteLoss(usize),
    #[error("gradient check failed: {0}")]
    GradCheck(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config { .. } => 3,
            CliError::MissingFile(_) => 4,
            CliError::Schema(_) => 5,
            CliError::BlowUp(_) => 6,
            CliError::NonFiniteLoss(_) => 7,
            CliError::GradCheck(_) => 8,
            CliError::Format(_) => 9,
            CliError::Io(_) => 10,
            CliError::Other(_) => 1,
        }
    }

    /// Machine-readable name of the failure class.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config_parse",
            CliError::MissingFile(_) => "missing_file",
            CliError::Schema(_) => "schema",
            CliError::BlowUp(_) => "solver_blow_up",
            CliError::NonFiniteLoss(_) => "non_finite_loss",
            CliError::GradCheck(_) => "gradcheck_failed",
            CliError::Format(_) => "format",
            CliError::Io(_) => "io",
            CliError::Other(_) => "internal",
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingFile(path.to_path_buf())
        } else {
            CliError::Io(format!("{}: {e}", path.display()))
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::BlowUp { .. } => CliError::BlowUp(e.to_string()),
            SolverError::InvalidConfig(_) => CliError::Schema(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Format(f) => f.into(),
            DatasetError::Solver(s) => s.into(),
            DatasetError::Generation { source: SolverError::BlowUp { .. }, .. } => CliError::BlowUp(e.to_string()),
            DatasetError::Invalid(_) => CliError::Format(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<FfnoError> for CliError {
    fn from(e: FfnoError) -> Self {
        match e {
            FfnoError::Format(f) => f.into(),
            FfnoError::Config(_) | FfnoError::GridTooSmall { .. } | FfnoError::Input(_) => CliError::Schema(e.to_string()),
            FfnoError::Autodiff(a) => CliError::Other(a.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Schema(e.to_string()),
            TrainError::NonFiniteLoss { step } => CliError::NonFiniteLoss(step),
            TrainError::Dataset(d) => d.into(),
            TrainError::Model(m) => m.into(),
            TrainError::Autodiff(a) => CliError::Other(a.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Solver(s) => s.into(),
            EvalError::Train(t) => t.into(),
            EvalError::Config(_) | EvalError::Shape(_) => CliError::Schema(e.to_string()),
            EvalError::Io(_) => CliError::Io(e.to_string()),
            EvalError::ZeroNorm | EvalError::Spectral(_) => CliError::Other(e.to_string()),
        }
    }
}
