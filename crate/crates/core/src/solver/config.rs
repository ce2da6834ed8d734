use serde::{Deserialize, Serialize};

use super::{ForcingSpec, SolverError};
use crate::spectral::{Grid2, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Crank-Nicolson on the linear term, second-order Adams-Bashforth on the rest.
    Cnab2,
    /// Five-stage low-storage IMEX Runge-Kutta (Carpenter-Kennedy 2N).
    Ck5Imex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub grid: Grid2,
    /// Kinematic viscosity (length^2 / time).
    pub nu: f64,
    pub forcing: ForcingSpec,
    pub scheme: Scheme,
    pub dt: f64,
    /// Exponential filter strength; `0` disables the filter.
    #[serde(default = "default_filter_alpha")]
    pub filter_alpha: f64,
    #[serde(default = "default_cutoff")]
    pub filter_cutoff_fraction: f64,
}

fn default_filter_alpha() -> f64 {
    23.6
}

fn default_cutoff() -> f64 {
    0.65
}

impl SolverConfig {
    pub fn new(grid: Grid2, nu: f64, forcing: ForcingSpec, scheme: Scheme, dt: f64) -> Self {
        Self {
            grid,
            nu,
            forcing,
            scheme,
            dt,
            filter_alpha: default_filter_alpha(),
            filter_cutoff_fraction: default_cutoff(),
        }
    }

    pub fn without_filter(mut self) -> Self {
        self.filter_alpha = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return bad(format!("nu = {} must be > 0", self.nu));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be > 0", self.dt));
        }
        if !(self.filter_alpha.is_finite() && self.filter_alpha >= 0.0) {
            return bad(format!("filter_alpha = {} must be >= 0", self.filter_alpha));
        }
        if !(self.filter_cutoff_fraction > 0.0 && self.filter_cutoff_fraction < 1.0) {
            return bad(format!(
                "filter_cutoff_fraction = {} must lie in (0, 1)",
                self.filter_cutoff_fraction
            ));
        }
        self.forcing.validate(&self.grid)
    }

    /// Same physics on a different grid.
    pub fn with_grid(&self, grid: Grid2) -> Self {
        Self { grid, ..self.clone() }
    }
}

/// Spectral vorticity at time `t`, plus the previous explicit term for CNAB2.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub omega_hat: SpectralField,
    pub t: f64,
    pub prev_nonlinear: Option<SpectralField>,
}

impl SolverState {
    pub fn new(omega_hat: SpectralField, t: f64) -> Self {
        Self { omega_hat, t, prev_nonlinear: None }
    }
}
