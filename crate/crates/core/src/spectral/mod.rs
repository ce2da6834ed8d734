//! Periodic grids, real-input 2D transforms, and spectral differential
//! operators relating vorticity, stream function, and velocity.
//!
//! Wavenumbers are kept in cycles per unit length (`kappa = j / L`); every
//! derivative applies the `2 pi` factor explicitly.

mod fft;
mod field;
mod grid;
mod ops;

pub use fft::{fft2_forward, fft2_inverse};
pub(crate) use fft::{fft2_forward_unchecked, fft2_inverse_unchecked};
pub use field::{RealField, SpectralField, VelocityField, VorticityField};
pub use grid::{Grid2, Wavenumbers, MAX_SIDE};
pub use ops::{
    curl_spectral, divergence, laplacian_symbol, spectral_gradient, spectral_laplacian,
    stream_from_vorticity, velocity_from_vorticity, velocity_spectra_from_vorticity,
    vorticity_from_velocity,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite value in {what} at flat index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("fields live on different grids")]
    GridMismatch,
}
