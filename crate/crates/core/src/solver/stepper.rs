use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Scheme, SolverConfig, SolverError, SolverState};
use crate::spectral::{
    fft2_forward_unchecked, fft2_inverse_unchecked, Grid2, RealField, SpectralField,
};

pub const BLOW_UP_THRESHOLD: f64 = 1e6;

/// Carpenter-Kennedy (1994) five-stage fourth-order 2N-storage tableau.
/// `ALPHA` are the stage times (with the closing 1), `BETA` the register
/// recurrences, `GAMMA` the stage weights. The stage times follow from the
/// other two through `c_{k+1} = c_k + gamma_k * r_k`, `r_k = beta_k r_{k-1} + 1`.
pub const CK_ALPHA: [f64; 6] = [
    0.0,
    0.149_659_021_999_229_12,
    0.370_400_957_364_204_75,
    0.622_255_763_134_443_2,
    0.958_282_130_674_690_3,
    1.0,
];
pub const CK_BETA: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
pub const CK_GAMMA: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];

/// Radial filter multiplier for a mode with wavenumbers `(kx, ky)` in cycles
/// per unit length. The radius is nondimensionalized by the grid spacing so
/// the Nyquist scale sits at `pi`.
pub fn filter_multiplier(grid: &Grid2, kx: f64, ky: f64, alpha: f64, cutoff_fraction: f64) -> f64 {
    let k = 2.0 * PI * ((kx * grid.dx()).powi(2) + (ky * grid.dy()).powi(2)).sqrt();
    let cutoff = cutoff_fraction * PI;
    if k <= cutoff || alpha == 0.0 {
        1.0
    } else {
        (-alpha * (k - cutoff).powi(4)).exp()
    }
}

/// Pseudo-spectral integrator for the forced 2D vorticity equation with
/// every per-mode symbol precomputed.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: SolverConfig,
    /// Linear symbol `-nu (2 pi)^2 |k|^2 - b`.
    lambda: Vec<f64>,
    filter: Vec<f64>,
    /// `2 pi kx` with the Nyquist column zeroed.
    dx_symbol: Vec<f64>,
    /// `2 pi ky` with the Nyquist row zeroed.
    dy_symbol: Vec<f64>,
    /// `1 / ((2 pi)^2 |k|^2)`, zero for the mean mode.
    inv_neg_lap: Vec<f64>,
    source: (SpectralField, SpectralField),
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let grid = cfg.grid;
        let w = grid.wavenumbers();
        let nxh = grid.nx_half();
        let (nyq_col, nyq_row) = (grid.nx() / 2, grid.ny() / 2);
        let n = grid.spectral_len();
        let mut lambda = Vec::with_capacity(n);
        let mut filter = Vec::with_capacity(n);
        let mut dx_symbol = Vec::with_capacity(n);
        let mut dy_symbol = Vec::with_capacity(n);
        let mut inv_neg_lap = Vec::with_capacity(n);
        for r in 0..grid.ny() {
            for c in 0..nxh {
                let (kx, ky) = (w.kx_half(c), w.ky[r]);
                let k2 = (2.0 * PI).powi(2) * (kx * kx + ky * ky);
                lambda.push(-cfg.nu * k2 - cfg.forcing.drag);
                filter.push(filter_multiplier(&grid, kx, ky, cfg.filter_alpha, cfg.filter_cutoff_fraction));
                dx_symbol.push(if c == nyq_col { 0.0 } else { 2.0 * PI * kx });
                dy_symbol.push(if r == nyq_row { 0.0 } else { 2.0 * PI * ky });
                inv_neg_lap.push(if r == 0 && c == 0 { 0.0 } else { 1.0 / k2 });
            }
        }
        let source = cfg.forcing.source_spectra(&grid);
        Ok(Self { cfg, lambda, filter, dx_symbol, dy_symbol, inv_neg_lap, source })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid2 {
        &self.cfg.grid
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    /// Per-mode linear symbol.
    pub fn linear_symbol(&self) -> &[f64] {
        &self.lambda
    }

    /// Per-mode filter multiplier.
    pub fn filter_symbol(&self) -> &[f64] {
        &self.filter
    }

    pub fn linear_term(&self, omega_hat: &SpectralField) -> SpectralField {
        self.per_mode(omega_hat, &self.lambda)
    }

    pub fn dissipation_filter(&self, spec: &SpectralField) -> SpectralField {
        self.per_mode(spec, &self.filter)
    }

    fn per_mode(&self, spec: &SpectralField, m: &[f64]) -> SpectralField {
        let coeffs = spec.coeffs().iter().zip(m).map(|(c, m)| c * m).collect();
        SpectralField::new(*spec.grid(), coeffs).expect("finite multipliers")
    }

    /// Advection term `-(u, v) . grad omega` only, in wavenumber space, before
    /// forcing and filtering. The mean mode is zero analytically and is set so.
    pub fn advection(&self, omega_hat: &SpectralField) -> SpectralField {
        let grid = *omega_hat.grid();
        let c = omega_hat.coeffs();
        let n = c.len();
        let mut u_hat = Vec::with_capacity(n);
        let mut v_hat = Vec::with_capacity(n);
        let mut wx_hat = Vec::with_capacity(n);
        let mut wy_hat = Vec::with_capacity(n);
        for idx in 0..n {
            let psi = c[idx] * self.inv_neg_lap[idx];
            let (kx, ky) = (self.dx_symbol[idx], self.dy_symbol[idx]);
            // i k z = (-k z.im, k z.re)
            u_hat.push(Complex64::new(-ky * psi.im, ky * psi.re));
            v_hat.push(Complex64::new(kx * psi.im, -kx * psi.re));
            wx_hat.push(Complex64::new(-kx * c[idx].im, kx * c[idx].re));
            wy_hat.push(Complex64::new(-ky * c[idx].im, ky * c[idx].re));
        }
        let real = |v: Vec<Complex64>| fft2_inverse_unchecked(&SpectralField::from_raw(grid, v));
        let (u, v, wx, wy) = (real(u_hat), real(v_hat), real(wx_hat), real(wy_hat));
        let adv: Vec<f64> = (0..grid.len())
            .map(|k| -(u.values()[k] * wx.values()[k] + v.values()[k] * wy.values()[k]))
            .collect();
        let mut out = fft2_forward_unchecked(&RealField::from_raw(grid, adv));
        out.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// Explicit term: filtered advection plus the vorticity source at time `t`.
    pub fn nonlinear_term(&self, omega_hat: &SpectralField, t: f64) -> SpectralField {
        let mut out = self.advection(omega_hat);
        let phase = self.cfg.forcing.shift_rate * t;
        let (cs, sn) = (phase.cos(), phase.sin());
        let (a, b) = (self.source.0.coeffs(), self.source.1.coeffs());
        for (idx, z) in out.coeffs_mut().iter_mut().enumerate() {
            *z = (*z + a[idx] * cs + b[idx] * sn) * self.filter[idx];
        }
        out
    }

    pub fn step(&self, state: &SolverState) -> Result<SolverState, SolverError> {
        match self.cfg.scheme {
            Scheme::Cnab2 => self.step_cnab2(state),
            Scheme::Ck5Imex => self.step_ck5(state),
        }
    }

    pub fn step_cnab2(&self, state: &SolverState) -> Result<SolverState, SolverError> {
        let dt = self.cfg.dt;
        let f_now = self.nonlinear_term(&state.omega_hat, state.t);
        let f_prev = state.prev_nonlinear.as_ref().unwrap_or(&f_now);
        let w = state.omega_hat.coeffs();
        let coeffs: Vec<Complex64> = (0..w.len())
            .map(|idx| {
                let half = 0.5 * dt * self.lambda[idx];
                let explicit = f_now.coeffs()[idx] * 1.5 - f_prev.coeffs()[idx] * 0.5;
                (w[idx] + explicit * dt + w[idx] * half) / (1.0 - half)
            })
            .collect();
        let t = state.t + dt;
        let omega_hat = self.checked(coeffs, t)?;
        Ok(SolverState { omega_hat, t, prev_nonlinear: Some(f_now) })
    }

    pub fn step_ck5(&self, state: &SolverState) -> Result<SolverState, SolverError> {
        let dt = self.cfg.dt;
        let grid = *state.omega_hat.grid();
        let mut omega = state.omega_hat.clone();
        let mut h = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
        for k in 0..CK_BETA.len() {
            let f = self.nonlinear_term(&omega, state.t + CK_ALPHA[k] * dt);
            let mu = 0.5 * dt * (CK_ALPHA[k + 1] - CK_ALPHA[k]);
            let gamma_dt = CK_GAMMA[k] * dt;
            for (idx, (hz, w)) in h.iter_mut().zip(omega.coeffs_mut()).enumerate() {
                *hz = f.coeffs()[idx] + *hz * CK_BETA[k];
                let ml = mu * self.lambda[idx];
                *w = (*w + *hz * gamma_dt + *w * ml) / (1.0 - ml);
            }
        }
        let t = state.t + dt;
        let omega_hat = self.checked(omega.into_coeffs(), t)?;
        Ok(SolverState { omega_hat, t, prev_nonlinear: None })
    }

    fn checked(&self, coeffs: Vec<Complex64>, t: f64) -> Result<SpectralField, SolverError> {
        let spec = SpectralField::from_raw(self.cfg.grid, coeffs);
        if !spec.is_finite() {
            return Err(SolverError::BlowUp { t, max_abs: f64::INFINITY });
        }
        let max_abs = fft2_inverse_unchecked(&spec).max_abs();
        if !(max_abs <= BLOW_UP_THRESHOLD) {
            return Err(SolverError::BlowUp { t, max_abs });
        }
        Ok(spec)
    }

    /// Takes `n` steps.
    pub fn advance(&self, state: &SolverState, n: usize) -> Result<SolverState, SolverError> {
        let mut s = state.clone();
        for _ in 0..n {
            s = self.step(&s)?;
        }
        Ok(s)
    }

    /// Integer number of steps covering `duration`, if it is a multiple of `dt`.
    pub fn steps_for(&self, duration: f64) -> Result<usize, SolverError> {
        let ratio = duration / self.cfg.dt;
        let n = ratio.round();
        if duration < 0.0 || (ratio - n).abs() > 1e-6 * n.max(1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "interval {duration} is not an integer multiple of dt = {}",
                self.cfg.dt
            )));
        }
        Ok(n as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain explicit 2N-storage Runge-Kutta on a scalar ODE using the tableau.
    fn ck_scalar(y0: f64, dt: f64, steps: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut y = y0;
        let mut t = 0.0;
        for _ in 0..steps {
            let mut h = 0.0;
            for k in 0..5 {
                h = f(y, t + CK_ALPHA[k] * dt) + CK_BETA[k] * h;
                y += CK_GAMMA[k] * dt * h;
            }
            t += dt;
        }
        y
    }

    #[test]
    fn tableau_is_fourth_order() {
        // y' = -y^2 + cos(t), reference from a much finer run.
        let f = |y: f64, t: f64| -y * y + t.cos();
        let reference = ck_scalar(0.5, 1.0 / 4096.0, 4096, f);
        let e1 = (ck_scalar(0.5, 1.0 / 16.0, 16, f) - reference).abs();
        let e2 = (ck_scalar(0.5, 1.0 / 32.0, 32, f) - reference).abs();
        let order = (e1 / e2).log2();
        assert!(order > 3.8, "observed order {order}");
    }

    #[test]
    fn tableau_stage_times_are_consistent() {
        let (mut r, mut c) = (0.0, 0.0);
        for k in 0..5 {
            r = CK_BETA[k] * r + 1.0;
            c += CK_GAMMA[k] * r;
            assert!((c - CK_ALPHA[k + 1]).abs() < 1e-14, "stage {k}: {c} vs {}", CK_ALPHA[k + 1]);
        }
        assert!((CK_ALPHA[2] - 0.3704009573644).abs() < 1e-12);
        assert!((CK_BETA[4] + 1.514183444257).abs() < 1e-12);
    }
}
