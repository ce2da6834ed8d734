//! Kolmogorov-flow ground truth, a factorized Fourier neural operator, and
//! the tooling to train and compare the two.

pub mod autodiff;
pub mod container;
pub mod dataset;
pub mod evaluation;
pub mod ffno;
mod fftlines;
pub mod solver;
pub mod spectral;
pub mod training;
