use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FfnoConfig, FfnoError, FfnoModel, ModelVars};
use crate::autodiff::gradcheck::{grad_check, GradCheckReport};
use crate::autodiff::Tensor;

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite")
}

/// Finite-difference check of the whole model (every parameter and the
/// input) under the normalized error loss against a random target.
pub fn model_grad_check(cfg: FfnoConfig, ny: usize, nx: usize, seed: u64, step: f64) -> Result<GradCheckReport, FfnoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = FfnoModel::init(cfg, &mut rng)?;
    let c = model.config().in_channels();
    let input = random_tensor(&mut rng, &[c, ny, nx]);
    let target = random_tensor(&mut rng, &[model.config().out_channels, ny, nx]);
    let mut inputs = model.params().to_vec();
    inputs.push(input);
    let n = model.params().len();
    let name = format!(
        "ffno(L={}, H={}, M={}, {}x{})",
        model.config().layers,
        model.config().hidden,
        model.config().modes,
        ny,
        nx
    );
    let report = grad_check(&name, &inputs, step, |tape, vars| {
        let mv = ModelVars(vars[..n].to_vec());
        let y = model.forward_on(tape, &mv, vars[n]).map_err(|e| match e {
            FfnoError::Autodiff(a) => a,
            other => crate::autodiff::AutodiffError::Shape(other.to_string()),
        })?;
        let t = tape.constant(target.clone());
        tape.mse_norm(y, t)
    })?;
    Ok(report)
}
