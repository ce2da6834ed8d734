use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::{fft2_forward_unchecked, fft2_inverse_unchecked};
use super::{RealField, SpectralError, SpectralField, VelocityField};

const TWO_PI: f64 = 2.0 * PI;

/// `(d/dx, d/dy)` by multiplication with `2 pi i kappa`. Nyquist modes have
/// no well-defined derivative sign and are set to zero.
pub fn spectral_gradient(spec: &SpectralField) -> (SpectralField, SpectralField) {
    let nyq_col = spec.grid().nx() / 2;
    let nyq_row = spec.grid().ny() / 2;
    let dx = spec.map_modes(|kx, _, col, _| {
        if col == nyq_col {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, TWO_PI * kx)
        }
    });
    let dy = spec.map_modes(|_, ky, _, row| {
        if row == nyq_row {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, TWO_PI * ky)
        }
    });
    (dx, dy)
}

/// Symbol of the Laplacian, `-(2 pi)^2 (kx^2 + ky^2)`.
pub fn laplacian_symbol(kx: f64, ky: f64) -> f64 {
    -(TWO_PI * TWO_PI) * (kx * kx + ky * ky)
}

pub fn spectral_laplacian(spec: &SpectralField) -> SpectralField {
    spec.map_modes(|kx, ky, _, _| Complex64::new(laplacian_symbol(kx, ky), 0.0))
}

/// Solves `lap psi = -omega`; the mean mode of `psi` is fixed to zero.
pub fn stream_from_vorticity(omega_hat: &SpectralField) -> SpectralField {
    omega_hat.map_modes(|kx, ky, col, row| {
        if col == 0 && row == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-1.0 / laplacian_symbol(kx, ky), 0.0)
        }
    })
}

/// Spectral velocity `(u_hat, v_hat) = (d psi/dy, -d psi/dx)`.
pub fn velocity_spectra_from_vorticity(omega_hat: &SpectralField) -> (SpectralField, SpectralField) {
    let psi = stream_from_vorticity(omega_hat);
    let (dpsi_dx, dpsi_dy) = spectral_gradient(&psi);
    (dpsi_dy, dpsi_dx.scale(-1.0))
}

pub fn velocity_from_vorticity(omega_hat: &SpectralField) -> VelocityField {
    let (u_hat, v_hat) = velocity_spectra_from_vorticity(omega_hat);
    let u = fft2_inverse_unchecked(&u_hat);
    let v = fft2_inverse_unchecked(&v_hat);
    VelocityField::from_components(u, v).expect("components share a grid")
}

/// Spectral curl `dv/dx - du/dy`.
pub fn curl_spectral(u_hat: &SpectralField, v_hat: &SpectralField) -> SpectralField {
    let (dv_dx, _) = spectral_gradient(v_hat);
    let (_, du_dy) = spectral_gradient(u_hat);
    dv_dx.axpy(-1.0, &du_dy)
}

pub fn vorticity_from_velocity(vel: &VelocityField) -> Result<RealField, SpectralError> {
    let u_hat = super::fft2_forward(&vel.u_field())?;
    let v_hat = super::fft2_forward(&vel.v_field())?;
    Ok(fft2_inverse_unchecked(&curl_spectral(&u_hat, &v_hat)))
}

/// Spectral divergence `du/dx + dv/dy`, returned in real space.
pub fn divergence(vel: &VelocityField) -> RealField {
    let u_hat = fft2_forward_unchecked(&vel.u_field());
    let v_hat = fft2_forward_unchecked(&vel.v_field());
    let (du_dx, _) = spectral_gradient(&u_hat);
    let (_, dv_dy) = spectral_gradient(&v_hat);
    fft2_inverse_unchecked(&du_dx.axpy(1.0, &dv_dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{fft2_forward, fft2_inverse, Grid2};

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    fn real(spec: &SpectralField) -> RealField {
        fft2_inverse(spec).unwrap()
    }

    fn spec_of(g: Grid2, f: impl Fn(f64, f64) -> f64) -> SpectralField {
        fft2_forward(&RealField::from_fn(g, f)).unwrap()
    }

    #[test]
    fn gradient_of_sine() {
        let g = Grid2::unit(32).unwrap();
        let (dx, dy) = spectral_gradient(&spec_of(g, |x, _| (TWO_PI * x).sin()));
        let expected = RealField::from_fn(g, |x, _| TWO_PI * (TWO_PI * x).cos());
        assert!(max_diff(real(&dx).values(), expected.values()) < 1e-10);
        assert!(real(&dy).max_abs() < 1e-10);
    }

    #[test]
    fn gradient_of_product_mode_along_y() {
        let g = Grid2::unit(32).unwrap();
        let s = spec_of(g, |x, y| (TWO_PI * x).sin() * (TWO_PI * y).sin());
        let (_, dy) = spectral_gradient(&s);
        let expected = RealField::from_fn(g, |x, y| TWO_PI * (TWO_PI * x).sin() * (TWO_PI * y).cos());
        assert!(max_diff(real(&dy).values(), expected.values()) < 1e-10);
    }

    #[test]
    fn constant_has_zero_gradient_and_laplacian() {
        let g = Grid2::unit(16).unwrap();
        let s = spec_of(g, |_, _| 3.0);
        let (dx, dy) = spectral_gradient(&s);
        assert!(dx.max_abs() == 0.0 && dy.max_abs() == 0.0);
        assert_eq!(spectral_laplacian(&s).max_abs(), 0.0);
    }

    #[test]
    fn laplacian_of_sine_and_composition() {
        let g = Grid2::unit(32).unwrap();
        let s = spec_of(g, |x, _| (TWO_PI * x).sin());
        let expected = RealField::from_fn(g, |x, _| -(TWO_PI * TWO_PI) * (TWO_PI * x).sin());
        assert!(max_diff(real(&spectral_laplacian(&s)).values(), expected.values()) < 1e-10);

        let smooth = spec_of(g, |x, y| (TWO_PI * (x + 2.0 * y)).cos() + (TWO_PI * 3.0 * x).sin() * (TWO_PI * y).cos());
        let (dx, dy) = spectral_gradient(&smooth);
        let (dxx, _) = spectral_gradient(&dx);
        let (_, dyy) = spectral_gradient(&dy);
        let twice = real(&dxx.axpy(1.0, &dyy));
        let direct = real(&spectral_laplacian(&smooth));
        let scale = direct.max_abs();
        assert!(max_diff(twice.values(), direct.values()) < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn poisson_solution() {
        let g = Grid2::unit(32).unwrap();
        let omega = spec_of(g, |x, y| 2.0 * TWO_PI * TWO_PI * (TWO_PI * x).sin() * (TWO_PI * y).sin());
        let psi = real(&stream_from_vorticity(&omega));
        let expected = RealField::from_fn(g, |x, y| (TWO_PI * x).sin() * (TWO_PI * y).sin());
        assert!(max_diff(psi.values(), expected.values()) < 1e-12);

        assert_eq!(stream_from_vorticity(&SpectralField::zeros(g)).max_abs(), 0.0);
        let dc = spec_of(g, |_, _| 4.0);
        assert_eq!(stream_from_vorticity(&dc).max_abs(), 0.0);
    }

    #[test]
    fn velocity_of_cellular_flow() {
        let g = Grid2::unit(32).unwrap();
        let omega = spec_of(g, |x, y| 2.0 * TWO_PI * TWO_PI * (TWO_PI * x).sin() * (TWO_PI * y).sin());
        let vel = velocity_from_vorticity(&omega);
        let u = RealField::from_fn(g, |x, y| TWO_PI * (TWO_PI * x).sin() * (TWO_PI * y).cos());
        let v = RealField::from_fn(g, |x, y| -TWO_PI * (TWO_PI * x).cos() * (TWO_PI * y).sin());
        assert!(max_diff(vel.u(), u.values()) < 1e-10);
        assert!(max_diff(vel.v(), v.values()) < 1e-10);

        let back = vorticity_from_velocity(&vel).unwrap();
        assert!(max_diff(back.values(), real(&omega).values()) < 1e-10 * TWO_PI * TWO_PI * 2.0);

        let still = velocity_from_vorticity(&SpectralField::zeros(g));
        assert_eq!(still.max_component(), 0.0);
        assert_eq!(vorticity_from_velocity(&still).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn round_trip_drops_mean() {
        let g = Grid2::unit(16).unwrap();
        let f = RealField::from_fn(g, |x, y| 1.5 + (TWO_PI * x).cos() * (TWO_PI * 2.0 * y).sin());
        let vel = velocity_from_vorticity(&fft2_forward(&f).unwrap());
        let back = vorticity_from_velocity(&vel).unwrap();
        let expected: Vec<f64> = f.values().iter().map(|v| v - 1.5).collect();
        assert!(max_diff(back.values(), &expected) < 1e-10);
    }
}
