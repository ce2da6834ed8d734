//! Central finite-difference checks of tape gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AutodiffError, ModeAxes, Tape, Tensor, Var};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub name: String,
    /// Worst error over all inputs.
    pub max_rel_error: f64,
    /// `max |analytic - numeric| / max(|numeric|_inf, floor)` per input.
    pub per_input: Vec<f64>,
}

impl GradCheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Compares the tape gradient of the scalar `f(inputs)` against central
/// differences with step `step`, for every element of every input.
pub fn grad_check<F>(name: &str, inputs: &[Tensor], step: f64, f: F) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let eval = |args: &[Tensor]| -> Result<f64, AutodiffError> {
        let mut t = Tape::new();
        let v: Vec<Var> = args.iter().map(|a| t.constant(a.clone())).collect();
        let out = f(&mut t, &v)?;
        Ok(t.value(out).item())
    };

    let mut args = inputs.to_vec();
    let mut per_input = Vec::with_capacity(inputs.len());
    for (k, var) in vars.iter().enumerate() {
        let zeros = Tensor::zeros(inputs[k].shape());
        let analytic = grads.get(*var).unwrap_or(&zeros);
        let mut numeric = vec![0.0; inputs[k].len()];
        for (j, slot) in numeric.iter_mut().enumerate() {
            let x0 = inputs[k].data()[j];
            args[k].data_mut()[j] = x0 + step;
            let up = eval(&args)?;
            args[k].data_mut()[j] = x0 - step;
            let down = eval(&args)?;
            args[k].data_mut()[j] = x0;
            *slot = (up - down) / (2.0 * step);
        }
        let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-10);
        let err = analytic.data().iter().zip(&numeric).fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
        per_input.push(err / scale);
    }
    let max_rel_error = per_input.iter().copied().fold(0.0, f64::max);
    Ok(GradCheckReport { name: name.to_string(), max_rel_error, per_input })
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    // Bounded away from zero so ReLU kinks stay outside the difference stencil.
    let data = (0..n).map(|_| rng.random_range(0.1..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    Tensor::new(shape.to_vec(), data).expect("finite")
}

/// Reduces a tensor output to a scalar through fixed random weights.
fn project(tape: &mut Tape, y: Var, seed: u64) -> Result<Var, AutodiffError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random(&mut rng, tape.value(y).shape());
    let w = tape.constant(w);
    let p = tape.mul(y, w)?;
    Ok(tape.sum(p))
}

type Case = (&'static str, Vec<Vec<usize>>, Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>>);

fn cases() -> Vec<Case> {
    vec![
        ("add", vec![vec![3, 4], vec![3, 4]], Box::new(|t, v| t.add(v[0], v[1]))),
        ("mul", vec![vec![3, 4], vec![3, 4]], Box::new(|t, v| t.mul(v[0], v[1]))),
        ("affine_scalar", vec![vec![5]], Box::new(|t, v| Ok(t.affine_scalar(v[0], -1.7, 0.3)))),
        ("relu", vec![vec![4, 3]], Box::new(|t, v| Ok(t.relu(v[0])))),
        ("sum", vec![vec![2, 3]], Box::new(|t, v| Ok(t.sum(v[0])))),
        (
            "matmul_pointwise",
            vec![vec![3, 4, 2], vec![2, 3], vec![2]],
            Box::new(|t, v| t.matmul_pointwise(v[0], v[1], Some(v[2]))),
        ),
        ("rfft_dim(0)", vec![vec![6, 3]], Box::new(|t, v| t.rfft_dim(v[0], 0))),
        ("rfft_dim(1)", vec![vec![2, 8]], Box::new(|t, v| t.rfft_dim(v[0], 1))),
        ("irfft_dim", vec![vec![2, 5, 3, 2]], Box::new(|t, v| t.irfft_dim(v[0], 1, 8))),
        ("cfft_dim", vec![vec![3, 4, 2]], Box::new(|t, v| t.cfft_dim(v[0], 0, false))),
        ("cfft_dim(inverse)", vec![vec![2, 6, 2]], Box::new(|t, v| t.cfft_dim(v[0], 1, true))),
        ("rdft_modes(0)", vec![vec![6, 3]], Box::new(|t, v| t.rdft_modes(v[0], 0, 3))),
        ("rdft_modes(1)", vec![vec![2, 8]], Box::new(|t, v| t.rdft_modes(v[0], 1, 5))),
        ("irdft_modes(0)", vec![vec![3, 2, 2]], Box::new(|t, v| t.irdft_modes(v[0], 0, 8))),
        ("irdft_modes(1)", vec![vec![2, 4, 2]], Box::new(|t, v| t.irdft_modes(v[0], 1, 6))),
        ("slice_modes", vec![vec![2, 5, 2]], Box::new(|t, v| t.slice_modes(v[0], 1, 3))),
        ("gather_modes", vec![vec![6, 2, 2]], Box::new(|t, v| t.gather_modes(v[0], 0, &[4, 0, 5]))),
        ("pad_modes", vec![vec![2, 3, 2]], Box::new(|t, v| t.pad_modes(v[0], 1, 5))),
        ("scatter_modes", vec![vec![3, 2]], Box::new(|t, v| t.scatter_modes(v[0], 0, &[5, 0, 2], 6))),
        (
            "complex_mode_mul(rows)",
            vec![vec![2, 3, 4, 2], vec![3, 3, 2, 2]],
            Box::new(|t, v| t.complex_mode_mul(v[0], v[1], ModeAxes::Rows)),
        ),
        (
            "complex_mode_mul(cols)",
            vec![vec![2, 3, 4, 2], vec![4, 2, 2, 2]],
            Box::new(|t, v| t.complex_mode_mul(v[0], v[1], ModeAxes::Cols)),
        ),
        (
            "complex_mode_mul(both)",
            vec![vec![3, 2, 2, 2], vec![2, 2, 2, 3, 2]],
            Box::new(|t, v| t.complex_mode_mul(v[0], v[1], ModeAxes::Both)),
        ),
    ]
}

/// Finite-difference check of every tape op on random small inputs.
pub fn op_checks(seed: u64, step: f64) -> Result<Vec<GradCheckReport>, AutodiffError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();
    for (i, (name, shapes, op)) in cases().into_iter().enumerate() {
        let inputs: Vec<Tensor> = shapes.iter().map(|s| random(&mut rng, s)).collect();
        let proj_seed = seed.wrapping_add(1000 + i as u64);
        reports.push(grad_check(name, &inputs, step, |t, v| {
            let y = op(t, v)?;
            if t.value(y).numel() == 1 {
                Ok(y)
            } else {
                project(t, y, proj_seed)
            }
        })?);
    }
    let inputs = [random(&mut rng, &[3, 4]), random(&mut rng, &[3, 4])];
    reports.push(grad_check("mse_norm", &inputs, step, |t, v| t.mse_norm(v[0], v[1]))?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_op_passes() {
        for r in op_checks(7, DEFAULT_STEP).unwrap() {
            assert!(r.passed(DEFAULT_TOLERANCE), "{}: {:e}", r.name, r.max_rel_error);
        }
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // relu evaluated exactly at its kink disagrees with the centered stencil
        let x = Tensor::new(vec![1], vec![0.0]).unwrap();
        let r = grad_check("kink", &[x], DEFAULT_STEP, |t, v| Ok(t.relu(v[0]))).unwrap();
        assert!(!r.passed(DEFAULT_TOLERANCE));
    }
}
