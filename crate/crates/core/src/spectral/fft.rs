use num_complex::Complex64;

use super::{RealField, SpectralError, SpectralField};
use crate::fftlines::fft_lines;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Real-input 2D transform: `coeffs[ky][kx] = sum f[j][i] e^{-2 pi i (kx i / nx + ky j / ny)}`
/// for `kx` in `0..=nx/2`.
pub fn fft2_forward(field: &RealField) -> Result<SpectralField, SpectralError> {
    if let Some(index) = field.values().iter().position(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite { what: "fft2_forward input", index });
    }
    Ok(fft2_forward_unchecked(field))
}

pub(crate) fn fft2_forward_unchecked(field: &RealField) -> SpectralField {
    let grid = *field.grid();
    let (nx, ny, nxh) = (grid.nx(), grid.ny(), grid.nx_half());

    let mut rows: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_lines(&mut rows, nx, false);

    // Transpose the kept columns so the y-transform runs on contiguous lines.
    let mut cols = vec![ZERO; nxh * ny];
    for j in 0..ny {
        for c in 0..nxh {
            cols[c * ny + j] = rows[j * nx + c];
        }
    }
    fft_lines(&mut cols, ny, false);

    let mut coeffs = vec![ZERO; grid.spectral_len()];
    for c in 0..nxh {
        for r in 0..ny {
            coeffs[r * nxh + c] = cols[c * ny + r];
        }
    }
    // Pure-real modes of a real signal.
    coeffs[0].im = 0.0;
    SpectralField::from_raw(grid, coeffs)
}

/// Inverse of [`fft2_forward`], normalized by `1 / (nx * ny)`.
///
/// Only the Hermitian part of the half spectrum contributes; for spectra that
/// came from a real field this is an exact inverse.
pub fn fft2_inverse(spec: &SpectralField) -> Result<RealField, SpectralError> {
    if let Some(index) = spec.coeffs().iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(SpectralError::NonFinite { what: "fft2_inverse input", index });
    }
    Ok(fft2_inverse_unchecked(spec))
}

pub(crate) fn fft2_inverse_unchecked(spec: &SpectralField) -> RealField {
    let grid = *spec.grid();
    let (nx, ny, nxh) = (grid.nx(), grid.ny(), grid.nx_half());

    let mut cols = vec![ZERO; nxh * ny];
    for r in 0..ny {
        for c in 0..nxh {
            cols[c * ny + r] = spec.coeffs()[r * nxh + c];
        }
    }
    fft_lines(&mut cols, ny, true);

    let mut rows = vec![ZERO; nx * ny];
    for j in 0..ny {
        let row = &mut rows[j * nx..(j + 1) * nx];
        for c in 0..nxh {
            row[c] = cols[c * ny + j];
        }
        for c in 1..nx / 2 {
            row[nx - c] = cols[c * ny + j].conj();
        }
    }
    fft_lines(&mut rows, nx, true);

    let norm = 1.0 / (nx * ny) as f64;
    RealField::from_raw(grid, rows.iter().map(|z| z.re * norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Direct O(n^4) DFT, independent of the FFT path.
    fn direct_dft(field: &RealField) -> Vec<Complex64> {
        let g = field.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let mut out = Vec::new();
        for ky in 0..ny {
            for kx in 0..=nx / 2 {
                let mut acc = ZERO;
                for j in 0..ny {
                    for i in 0..nx {
                        let phase = -2.0 * PI * (kx as f64 * i as f64 / nx as f64 + ky as f64 * j as f64 / ny as f64);
                        acc += Complex64::from_polar(field.get(i, j), phase);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    fn random_field(grid: Grid2, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        RealField::new(grid, values).unwrap()
    }

    #[test]
    fn constant_field_is_dc_only() {
        let g = Grid2::unit(8).unwrap();
        let spec = fft2_forward(&RealField::from_fn(g, |_, _| 2.5)).unwrap();
        assert!((spec.get(0, 0).re - 2.5 * 64.0).abs() < 1e-12);
        for (idx, c) in spec.coeffs().iter().enumerate().skip(1) {
            assert!(c.norm() < 1e-12, "mode {idx} = {c}");
        }
    }

    #[test]
    fn single_cosine_mode() {
        let g = Grid2::new(8, 8, 1.0, 1.0).unwrap();
        let f = RealField::from_fn(g, |x, _| (2.0 * PI * x / g.lx()).cos());
        let spec = fft2_forward(&f).unwrap();
        for r in 0..8 {
            for c in 0..5 {
                let z = spec.get(r, c);
                if (r, c) == (0, 1) {
                    // The conjugate partner at kx = -1 is implied by the half layout.
                    assert!((z.re - 32.0).abs() < 1e-12 && z.im.abs() < 1e-12);
                } else {
                    assert!(z.norm() < 1e-12, "({r},{c}) = {z}");
                }
            }
        }
    }

    #[test]
    fn matches_direct_dft_and_round_trips() {
        let g = Grid2::new(16, 16, 1.0, 1.0).unwrap();
        let f = random_field(g, 7);
        let spec = fft2_forward(&f).unwrap();
        let oracle = direct_dft(&f);
        for (a, b) in spec.coeffs().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-11, "{a} vs {b}");
        }
        let back = fft2_inverse(&spec).unwrap();
        let err = back.values().iter().zip(f.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn rectangular_grid_matches_direct_dft() {
        let g = Grid2::new(12, 6, 2.0, 0.5).unwrap();
        let f = random_field(g, 3);
        let spec = fft2_forward(&f).unwrap();
        for (a, b) in spec.coeffs().iter().zip(&direct_dft(&f)) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let g = Grid2::unit(8).unwrap();
        let mut values = vec![0.0; 64];
        values[5] = f64::NAN;
        let f = RealField::from_raw(g, values);
        assert!(matches!(fft2_forward(&f), Err(SpectralError::NonFinite { index: 5, .. })));
    }
}
