use super::{DatasetError, TrajectoryDataset};
use crate::spectral::{fft2_forward_unchecked, fft2_inverse_unchecked, Grid2, RealField, SpectralField};

/// Moves a spectrum to another resolution of the same domain, keeping every
/// mode strictly below both Nyquist frequencies and zeroing the rest.
pub fn resample_spectrum(spec: &SpectralField, target: Grid2) -> SpectralField {
    let src = *spec.grid();
    let scale = target.len() as f64 / src.len() as f64;
    let (src_h, dst_h) = (src.nx() / 2, target.nx() / 2);
    let (src_v, dst_v) = (src.ny() / 2, target.ny() / 2);
    let mut out = SpectralField::zeros(target);
    for r in 0..target.ny() {
        let ky = if r < dst_v { r as i64 } else { r as i64 - target.ny() as i64 };
        if r == dst_v || ky.unsigned_abs() as usize >= src_v {
            continue;
        }
        let src_row = ky.rem_euclid(src.ny() as i64) as usize;
        for c in 0..dst_h.min(src_h) {
            out.set(r, c, spec.get(src_row, c) * scale);
        }
    }
    out.coeffs_mut()[0].im = 0.0;
    out
}

/// Spectral resampling of a real field onto `target` (same domain lengths).
pub fn truncate_field(field: &RealField, target: Grid2) -> RealField {
    fft2_inverse_unchecked(&resample_spectrum(&fft2_forward_unchecked(field), target))
}

/// Keeps the lowest `n / factor` modes per dimension of every frame.
pub fn downsample(ds: &TrajectoryDataset, factor: usize) -> Result<TrajectoryDataset, DatasetError> {
    let (nx, ny) = (ds.grid.nx(), ds.grid.ny());
    if factor == 0 || nx % factor != 0 || ny % factor != 0 {
        return Err(DatasetError::Factor { factor, nx, ny });
    }
    if factor == 1 {
        return Ok(ds.clone());
    }
    let target = ds
        .grid
        .resized(nx / factor, ny / factor)
        .map_err(|_| DatasetError::Factor { factor, nx, ny })?;
    let mut vorticity = Vec::with_capacity(ds.len() * ds.frames * target.len());
    for n in 0..ds.len() {
        for t in 0..ds.frames {
            let coarse = truncate_field(&ds.frame_field(n, t), target);
            vorticity.extend(coarse.values().iter().map(|&v| v as f32));
        }
    }
    let mut provenance = ds.provenance.clone();
    if let serde_json::Value::Object(map) = &mut provenance {
        let prior = map.get("downsampled_by").and_then(|v| v.as_u64()).unwrap_or(1);
        map.insert("downsampled_by".into(), serde_json::Value::from(prior * factor as u64));
    }
    Ok(TrajectoryDataset { grid: target, vorticity, provenance, ..ds.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use crate::dataset::{Split, TrajectoryMeta};
    use crate::solver::ForcingSpec;
    use crate::spectral::fft2_forward;
    use std::f64::consts::PI;

    fn dataset_of(field: &RealField) -> TrajectoryDataset {
        let mut vorticity: Vec<f32> = field.values().iter().map(|&v| v as f32).collect();
        vorticity.extend_from_within(..);
        TrajectoryDataset {
            grid: *field.grid(),
            record_dt: 1.0,
            start_time: 0.0,
            split: Split::Train,
            seed: 0,
            trajectories: vec![TrajectoryMeta { viscosity: 1e-3, forcing: ForcingSpec::none() }],
            frames: 2,
            vorticity,
            provenance: serde_json::json!({}),
        }
    }

    #[test]
    fn factor_one_is_identity_and_bad_factor_rejected() {
        let g = Grid2::unit(16).unwrap();
        let ds = dataset_of(&RealField::from_fn(g, |x, y| (2.0 * PI * x).sin() + y));
        assert_eq!(downsample(&ds, 1).unwrap(), ds);
        assert!(matches!(downsample(&ds, 3), Err(DatasetError::Factor { factor: 3, .. })));
        assert!(matches!(downsample(&ds, 0), Err(DatasetError::Factor { .. })));
    }

    #[test]
    fn low_mode_survives() {
        let g = Grid2::unit(64).unwrap();
        let f = |x: f64, y: f64| (2.0 * PI * (2.0 * x - y)).cos() + 0.5 * (2.0 * PI * 3.0 * y).sin();
        for factor in [2, 4] {
            let coarse = truncate_field(&RealField::from_fn(g, f), g.resized(64 / factor, 64 / factor).unwrap());
            let expected = RealField::from_fn(*coarse.grid(), f);
            let err = coarse.values().iter().zip(expected.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-12, "factor {factor}: {err}");
        }
    }

    #[test]
    fn downsampled_spectrum_is_truncated_original() {
        use rand::{Rng, SeedableRng};
        let g = Grid2::unit(32).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let field = RealField::new(g, (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let full = fft2_forward(&field).unwrap();
        let target = g.resized(16, 16).unwrap();
        let coarse = fft2_forward(&truncate_field(&field, target)).unwrap();
        let scale = 256.0 / 1024.0;
        for r in 0..16usize {
            let ky = if r < 8 { r as i64 } else { r as i64 - 16 };
            for c in 0..9usize {
                let got = coarse.get(r, c);
                let expected = if r == 8 || c == 8 {
                    Complex64::new(0.0, 0.0)
                } else {
                    full.get(ky.rem_euclid(32) as usize, c) * scale
                };
                assert!((got - expected).norm() < 1e-10, "mode ({r},{c}): {got} vs {expected}");
            }
        }
    }

    #[test]
    fn upsampling_is_exact_for_band_limited_fields() {
        let g = Grid2::two_pi(16).unwrap();
        let f = |x: f64, y: f64| x.sin() * (3.0 * y).cos() + (2.0 * x + y).sin();
        let fine = truncate_field(&RealField::from_fn(g, f), g.resized(32, 32).unwrap());
        let expected = RealField::from_fn(*fine.grid(), f);
        let err = fine.values().iter().zip(expected.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12);
    }
}
