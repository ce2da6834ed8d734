use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Uniform periodic grid on `[0, lx) x [0, ly)`.
///
/// Real-space arrays are stored row-major as `[ny][nx]`: index `j * nx + i`
/// is the point `(x_i, y_j) = (i * lx / nx, j * ly / ny)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid2 {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl TryFrom<GridRepr> for Grid2 {
    type Error = SpectralError;

    fn try_from(r: GridRepr) -> Result<Self, Self::Error> {
        Grid2::new(r.nx, r.ny, r.lx, r.ly)
    }
}

impl From<Grid2> for GridRepr {
    fn from(g: Grid2) -> Self {
        GridRepr { nx: g.nx, ny: g.ny, lx: g.lx, ly: g.ly }
    }
}

/// Largest accepted points per side. Keeps a malformed config or file from
/// requesting a solver that cannot be allocated.
pub const MAX_SIDE: usize = 4096;

impl Grid2 {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, SpectralError> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 4 || n % 2 != 0 || n > MAX_SIDE {
                return Err(SpectralError::InvalidGrid(format!(
                    "{name} = {n} must be even and between 4 and {MAX_SIDE}"
                )));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(SpectralError::InvalidGrid(format!(
                    "{name} = {l} must be positive and finite"
                )));
            }
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square `n x n` grid on the unit torus.
    pub fn unit(n: usize) -> Result<Self, SpectralError> {
        Self::new(n, n, 1.0, 1.0)
    }

    /// Square `n x n` grid on `[0, 2pi)^2`.
    pub fn two_pi(n: usize) -> Result<Self, SpectralError> {
        let l = 2.0 * std::f64::consts::PI;
        Self::new(n, n, l, l)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Number of real grid points.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Columns kept by the real-input transform along x.
    pub fn nx_half(&self) -> usize {
        self.nx / 2 + 1
    }

    /// Number of half-spectrum coefficients.
    pub fn spectral_len(&self) -> usize {
        self.ny * self.nx_half()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }

    /// Same domain at a different resolution.
    pub fn resized(&self, nx: usize, ny: usize) -> Result<Self, SpectralError> {
        Self::new(nx, ny, self.lx, self.ly)
    }

    pub fn wavenumbers(&self) -> Wavenumbers {
        Wavenumbers::new(self)
    }
}

/// Signed wavenumbers in cycles per unit length, in FFT ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavenumbers {
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
}

fn fft_frequencies(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let signed = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            signed / l
        })
        .collect()
}

impl Wavenumbers {
    pub fn new(grid: &Grid2) -> Self {
        Self {
            kx: fft_frequencies(grid.nx, grid.lx),
            ky: fft_frequencies(grid.ny, grid.ly),
        }
    }

    /// `kx` of half-spectrum column `c` (the last column is the Nyquist mode).
    pub fn kx_half(&self, c: usize) -> f64 {
        self.kx[c % self.kx.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_grids() {
        assert!(Grid2::new(5, 8, 1.0, 1.0).is_err());
        assert!(Grid2::new(8, 2, 1.0, 1.0).is_err());
        assert!(Grid2::new(8, 8, 0.0, 1.0).is_err());
        assert!(Grid2::new(8, 8, 1.0, f64::NAN).is_err());
        assert!(Grid2::new(4, 4, 1.0, 1.0).is_ok());
    }

    #[test]
    fn wavenumber_ordering_and_symmetry() {
        let g = Grid2::new(8, 6, 2.0, 1.0).unwrap();
        let w = g.wavenumbers();
        assert_eq!(w.kx, vec![0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5]);
        assert_eq!(w.ky, vec![0.0, 1.0, 2.0, -3.0, -2.0, -1.0]);
        for j in 1..4 {
            assert_eq!(w.kx[j], -w.kx[8 - j]);
        }
        assert_eq!(w.kx_half(4), -2.0);
    }

    #[test]
    fn serde_validates() {
        let bad: Result<Grid2, _> = serde_json::from_str(r#"{"nx":7,"ny":8,"lx":1,"ly":1}"#);
        assert!(Grid2::unit(MAX_SIDE + 2).is_err() && Grid2::unit(MAX_SIDE).is_ok());
        assert!(bad.is_err());
        let good: Grid2 = serde_json::from_str(r#"{"nx":8,"ny":8,"lx":1,"ly":1}"#).unwrap();
        assert_eq!(good.nx(), 8);
    }
}
