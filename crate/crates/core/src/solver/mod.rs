//! Pseudo-spectral time integration of the forced 2D vorticity equation
//!
//! ```text
//! d omega_hat / dt = lambda(k) omega_hat + F{ -u . grad omega + f }
//! lambda(k) = -nu (2 pi)^2 |k|^2 - b
//! ```
//!
//! The linear part (viscosity and drag) is treated implicitly per mode; the
//! advection and body force are evaluated in physical space and pass through
//! an exponential high-wavenumber filter, which is also the only dealiasing.

mod config;
mod forcing;
mod stepper;

pub use config::{Scheme, SolverConfig, SolverState};
pub use forcing::{ForcingAmplitudes, ForcingKind, ForcingSpec};
pub use stepper::{filter_multiplier, Solver, BLOW_UP_THRESHOLD, CK_ALPHA, CK_BETA, CK_GAMMA};

use crate::spectral::{Grid2, SpectralField, VelocityField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("solution blew up at t = {t}: max |omega| = {max_abs:e}")]
    BlowUp { t: f64, max_abs: f64 },
}

pub fn linear_term(omega_hat: &SpectralField, cfg: &SolverConfig) -> Result<SpectralField, SolverError> {
    Ok(Solver::new(cfg.clone())?.linear_term(omega_hat))
}

pub fn nonlinear_term(omega_hat: &SpectralField, t: f64, cfg: &SolverConfig) -> Result<SpectralField, SolverError> {
    Ok(Solver::new(cfg.clone())?.nonlinear_term(omega_hat, t))
}

pub fn dissipation_filter(spec: &SpectralField, cfg: &SolverConfig) -> Result<SpectralField, SolverError> {
    Ok(Solver::new(cfg.clone())?.dissipation_filter(spec))
}

pub fn step_cnab2(state: &SolverState, cfg: &SolverConfig) -> Result<SolverState, SolverError> {
    Solver::new(cfg.clone())?.step_cnab2(state)
}

pub fn step_ck5(state: &SolverState, cfg: &SolverConfig) -> Result<SolverState, SolverError> {
    Solver::new(cfg.clone())?.step_ck5(state)
}

/// Advective time step `c_max * dx / max(|u|, |v|)`, capped at `dt_ceiling`.
/// A motionless field returns the ceiling.
pub fn cfl_dt(vel: &VelocityField, grid: &Grid2, c_max: f64, dt_ceiling: f64) -> f64 {
    let speed = vel.max_component();
    if speed == 0.0 {
        return dt_ceiling;
    }
    let dx = grid.dx().min(grid.dy());
    (c_max * dx / speed).min(dt_ceiling)
}

/// `Re ~ sqrt(0.1) / (nu (2 pi)^{3/2})` for the unit-torus forcing.
pub fn reynolds_estimate(nu: f64) -> f64 {
    0.1f64.sqrt() / (nu * (2.0 * std::f64::consts::PI).powf(1.5))
}
