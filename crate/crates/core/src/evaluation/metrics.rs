use super::EvalError;
use crate::spectral::{fft2_forward_unchecked, RealField, VelocityField};

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Shape(format!("fields of {} and {} values", a.len(), b.len())));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||pred - truth||_2 / ||truth||_2` for one field.
pub fn relative_l2(pred: &[f64], truth: &[f64]) -> Result<f64, EvalError> {
    check_pair(pred, truth)?;
    let tn = norm(truth);
    if tn == 0.0 {
        return Err(EvalError::ZeroNorm);
    }
    let diff: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(diff.sqrt() / tn)
}

/// Batch mean of [`relative_l2`].
pub fn n_mse(pred: &[RealField], truth: &[RealField]) -> Result<f64, EvalError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(EvalError::Shape(format!("batches of {} and {} fields", pred.len(), truth.len())));
    }
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        total += relative_l2(p.values(), t.values())?;
    }
    Ok(total / pred.len() as f64)
}

/// Cosine similarity `sum (a / |a|)(b / |b|)` of two fields.
pub fn vorticity_correlation(a: &RealField, b: &RealField) -> Result<f64, EvalError> {
    let (a, b) = (a.values(), b.values());
    check_pair(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(EvalError::ZeroNorm);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x / na) * (y / nb)).sum())
}

/// First time the correlation sequence (frame `i` at `i * record_dt`) drops
/// below `threshold`, interpolated linearly between frames. A sequence that
/// never drops returns the time of its last frame.
pub fn time_to_decorrelation(rho: &[f64], record_dt: f64, threshold: f64) -> f64 {
    let Some(i) = rho.iter().position(|&r| r < threshold) else {
        return rho.len().saturating_sub(1) as f64 * record_dt;
    };
    if i == 0 {
        return 0.0;
    }
    let (hi, lo) = (rho[i - 1], rho[i]);
    ((i - 1) as f64 + (hi - threshold) / (hi - lo)) * record_dt
}

/// Radial kinetic energy spectrum `E(k) = sum 0.5 (|u_k|^2 + |v_k|^2)` with
/// coefficients normalized by the grid size, binned by the nearest integer
/// radial wavenumber in cycles per domain. The bins sum to the mean kinetic
/// energy `0.5 <u^2 + v^2>`.
pub fn energy_spectrum(vel: &VelocityField) -> Vec<f64> {
    let grid = *vel.grid();
    let wn = grid.wavenumbers();
    let uh = fft2_forward_unchecked(&vel.u_field());
    let vh = fft2_forward_unchecked(&vel.v_field());
    let (lx, ly) = (grid.lx(), grid.ly());
    let kmax = ((grid.nx() / 2).pow(2) as f64 + (grid.ny() / 2).pow(2) as f64).sqrt();
    let mut bins = vec![0.0; (kmax + 0.5).floor() as usize + 1];
    let scale = 1.0 / (grid.len() as f64).powi(2);
    let nxh = grid.nx_half();
    for (idx, (a, b)) in uh.coeffs().iter().zip(vh.coeffs()).enumerate() {
        let (row, col) = (idx / nxh, idx % nxh);
        let k = ((wn.kx_half(col) * lx).powi(2) + (wn.ky[row] * ly).powi(2)).sqrt();
        let e = 0.5 * uh.column_weight(col) * (a.norm_sqr() + b.norm_sqr()) * scale;
        bins[(k + 0.5).floor() as usize] += e;
    }
    bins
}
