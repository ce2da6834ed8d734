use num_complex::Complex64;

use super::{Grid2, SpectralError};

/// Real scalar field on a periodic grid, stored row-major as `[ny][nx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid2,
    values: Vec<f64>,
}

/// The evolved scalar of the 2D solver.
pub type VorticityField = RealField;

impl RealField {
    pub fn new(grid: Grid2, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite {
                what: "real field",
                index: pos,
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: Grid2, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx() + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Half spectrum of a real field: `[ny][nx/2 + 1]` complex coefficients,
/// unnormalized forward transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid2,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid2, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.spectral_len() {
            return Err(SpectralError::ShapeMismatch {
                expected: grid.spectral_len(),
                found: coeffs.len(),
            });
        }
        if let Some(pos) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(SpectralError::NonFinite {
                what: "spectral field",
                index: pos,
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid2) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.spectral_len()],
        }
    }

    pub(crate) fn from_raw(grid: Grid2, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.spectral_len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at row `ky_index` (FFT ordering) and half-spectrum column `kx_index`.
    pub fn get(&self, ky_index: usize, kx_index: usize) -> Complex64 {
        self.coeffs[ky_index * self.grid.nx_half() + kx_index]
    }

    pub fn set(&mut self, ky_index: usize, kx_index: usize, value: Complex64) {
        let nxh = self.grid.nx_half();
        self.coeffs[ky_index * nxh + kx_index] = value;
    }

    /// Multiplies every mode by `m(kx, ky)` (wavenumbers in cycles per unit length).
    pub fn map_modes(&self, m: impl Fn(f64, f64, usize, usize) -> Complex64) -> Self {
        let w = self.grid.wavenumbers();
        let nxh = self.grid.nx_half();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (r, col) = (idx / nxh, idx % nxh);
                c * m(w.kx_half(col), w.ky[r], col, r)
            })
            .collect();
        Self::from_raw(self.grid, coeffs)
    }

    /// Weight of a half-spectrum column in sums over the full spectrum.
    pub fn column_weight(&self, col: usize) -> f64 {
        if col == 0 || col == self.grid.nx() / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// `sum |c|^2` over the full (conjugate-extended) spectrum.
    pub fn power_sum(&self) -> f64 {
        let nxh = self.grid.nx_half();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| self.column_weight(idx % nxh) * c.norm_sqr())
            .sum()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_raw(self.grid, self.coeffs.iter().map(|c| c * a).collect())
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        Self::from_raw(self.grid, coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Velocity components on the real grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    grid: Grid2,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl VelocityField {
    pub fn new(grid: Grid2, u: Vec<f64>, v: Vec<f64>) -> Result<Self, SpectralError> {
        let u = RealField::new(grid, u)?.into_values();
        let v = RealField::new(grid, v)?.into_values();
        Ok(Self { grid, u, v })
    }

    pub fn from_components(u: RealField, v: RealField) -> Result<Self, SpectralError> {
        if u.grid() != v.grid() {
            return Err(SpectralError::GridMismatch);
        }
        let grid = *u.grid();
        Ok(Self { grid, u: u.into_values(), v: v.into_values() })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn u_field(&self) -> RealField {
        RealField::from_raw(self.grid, self.u.clone())
    }

    pub fn v_field(&self) -> RealField {
        RealField::from_raw(self.grid, self.v.clone())
    }

    /// Largest component magnitude, `max(|u|, |v|)` over the grid.
    pub fn max_component(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_speed(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt()))
    }

    /// Domain-averaged kinetic energy `0.5 * mean(u^2 + v^2)`.
    pub fn kinetic_energy(&self) -> f64 {
        let s: f64 = self.u.iter().zip(&self.v).map(|(a, b)| a * a + b * b).sum();
        0.5 * s / self.u.len() as f64
    }
}
