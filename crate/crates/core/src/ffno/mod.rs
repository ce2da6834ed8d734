//! Factorized Fourier neural operator.
//!
//! A model maps a `[C_in, ny, nx]` input to a `[C_out, ny, nx]` output
//! through a pointwise lifting to `H` channels, `L` operator layers and a
//! two-layer pointwise projection. Each factorized layer transforms along `x`
//! and `y` separately, keeps the lowest `M` frequencies of each real FFT,
//! mixes channels per mode with complex `H x H` weights and sums the two
//! branches. Weights do not depend on the grid, so a model runs on any grid
//! with at least `2M` points per side.

mod checkpoint;
mod gradcheck;
mod inputs;
mod model;

pub use checkpoint::{
    load_model, model_entries, model_from_bytes, model_from_container, model_to_bytes, save_model, CHECKPOINT_MAGIC,
};
pub(crate) use checkpoint::tensor_from_array;
pub use gradcheck::model_grad_check;
pub use inputs::{build_input_channels, FrameContext, InputOptions};
pub use model::{
    joint_row_modes, layer_forward, model_forward, parameter_count, spectral_kernel, FfnoConfig, FfnoModel,
    LayerStyle, ModelVars, ParameterCount,
};

use crate::autodiff::AutodiffError;
use crate::container::FormatError;

#[derive(Debug, thiserror::Error)]
pub enum FfnoError {
    #[error("invalid model: {0}")]
    Config(String),
    #[error("grid {nx}x{ny} is too small for {modes} modes (need at least {} per side)", 2 * modes)]
    GridTooSmall { nx: usize, ny: usize, modes: usize },
    #[error("bad input: {0}")]
    Input(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Format(#[from] FormatError),
}
