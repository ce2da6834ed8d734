//! Accuracy metrics, operator and solver rollouts, and the speed/accuracy
//! scans comparing the two.

mod csv;
mod metrics;
mod pareto;
mod rollout;

pub use self::csv::{write_metrics_csv, write_pareto_csv, write_spectrum_csv};
pub use metrics::{energy_spectrum, n_mse, relative_l2, time_to_decorrelation, vorticity_correlation};
pub use pareto::{pareto_scan, run_case, step_size_study, ParetoRow, ScanCase, ScanReference, DEFAULT_THRESHOLD};
pub use rollout::{
    mean_n_mse, one_step_metrics, persistence_rollout, rollout_metrics, rollout_operator, rollout_solver, MetricRow,
    RolloutResult, TimingOptions, OPERATOR, PERSISTENCE,
};

use crate::solver::SolverError;
use crate::spectral::SpectralError;
use crate::training::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("reference field has zero norm")]
    ZeroNorm,
    #[error("invalid evaluation setup: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("i/o: {0}")]
    Io(String),
}
