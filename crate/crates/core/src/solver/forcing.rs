use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::spectral::{fft2_forward_unchecked, Grid2, RealField, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    /// No body force; drag still applies.
    None,
    /// `f = sin(4y) x_hat`, vorticity source `-4 cos(4y)`.
    KolmogorovSin,
    /// `f = 4 cos(4y) x_hat`, vorticity source `16 sin(4y)`.
    KochkovCos,
    /// Vorticity source `0.1 (sin(2 pi (x + y)) + cos(2 pi (x + y)))`.
    TorusLi,
    /// Random superposition of low modes with optional phase drift.
    TorusRandom,
}

/// Amplitudes of the random torus forcing, indexed `[p - 1][i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingAmplitudes {
    pub alpha: [[[f64; 2]; 2]; 2],
    pub beta: [[[f64; 2]; 2]; 2],
}

impl ForcingAmplitudes {
    pub fn sample<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        let mut draw = || -> [[[f64; 2]; 2]; 2] {
            let mut a = [[[0.0; 2]; 2]; 2];
            for p in a.iter_mut() {
                for i in p.iter_mut() {
                    for j in i.iter_mut() {
                        *j = rng.random::<f64>();
                    }
                }
            }
            a
        };
        let alpha = draw();
        let beta = draw();
        Self { alpha, beta }
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.alpha
            .iter()
            .chain(&self.beta)
            .flat_map(|p| p.iter().flat_map(|i| i.iter().copied()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    /// Linear drag coefficient `b` in `-b u` (1/time).
    #[serde(default = "default_drag")]
    pub drag: f64,
    /// Required for [`ForcingKind::TorusRandom`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<ForcingAmplitudes>,
    /// Phase drift rate `delta` of the random forcing (1/time).
    #[serde(default)]
    pub shift_rate: f64,
}

fn default_drag() -> f64 {
    0.1
}

impl ForcingSpec {
    pub fn none() -> Self {
        Self { kind: ForcingKind::None, drag: 0.0, amplitudes: None, shift_rate: 0.0 }
    }

    pub fn kolmogorov_sin(drag: f64) -> Self {
        Self { kind: ForcingKind::KolmogorovSin, drag, amplitudes: None, shift_rate: 0.0 }
    }

    pub fn kochkov_cos(drag: f64) -> Self {
        Self { kind: ForcingKind::KochkovCos, drag, amplitudes: None, shift_rate: 0.0 }
    }

    pub fn torus_li() -> Self {
        Self { kind: ForcingKind::TorusLi, drag: 0.0, amplitudes: None, shift_rate: 0.0 }
    }

    pub fn torus_random(amplitudes: ForcingAmplitudes, shift_rate: f64) -> Self {
        Self {
            kind: ForcingKind::TorusRandom,
            drag: 0.0,
            amplitudes: Some(amplitudes),
            shift_rate,
        }
    }

    pub fn validate(&self, grid: &Grid2) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.drag.is_finite() && self.drag >= 0.0) {
            return bad(format!("forcing.drag = {} must be >= 0", self.drag));
        }
        if !self.shift_rate.is_finite() {
            return bad("forcing.shift_rate must be finite".into());
        }
        match (self.kind, &self.amplitudes) {
            (ForcingKind::TorusRandom, None) => {
                return bad("forcing.amplitudes required for torus_random".into())
            }
            (ForcingKind::TorusRandom, Some(a)) => {
                if a.values().any(|v| !(0.0..=1.0).contains(&v)) {
                    return bad("forcing.amplitudes must lie in [0, 1]".into());
                }
            }
            (_, Some(_)) => return bad("forcing.amplitudes only apply to torus_random".into()),
            _ => {}
        }
        // The forcing must be periodic on the domain.
        let periods: &[(f64, &str)] = match self.kind {
            ForcingKind::None => &[],
            ForcingKind::KolmogorovSin | ForcingKind::KochkovCos => &[(4.0 * grid.ly() / (2.0 * PI), "ly")],
            ForcingKind::TorusLi | ForcingKind::TorusRandom => &[(grid.lx(), "lx"), (grid.ly(), "ly")],
        };
        for &(cycles, name) in periods {
            if (cycles - cycles.round()).abs() > 1e-9 || cycles.round() < 1.0 {
                return bad(format!("{:?} forcing is not periodic for domain length {name}", self.kind));
            }
        }
        Ok(())
    }

    pub fn is_time_dependent(&self) -> bool {
        self.kind == ForcingKind::TorusRandom && self.shift_rate != 0.0
    }

    /// Scalar source in the vorticity equation at time `t`, sampled on `grid`.
    pub fn vorticity_source(&self, grid: &Grid2, t: f64) -> RealField {
        let (a, b) = self.source_components(grid);
        let phase = self.shift_rate * t;
        let (c, s) = (phase.cos(), phase.sin());
        let values = a.values().iter().zip(b.values()).map(|(x, y)| c * x + s * y).collect();
        RealField::new(*grid, values).expect("forcing is finite")
    }

    /// Splits the source as `cos(delta t) * A + sin(delta t) * B`.
    pub(crate) fn source_components(&self, grid: &Grid2) -> (RealField, RealField) {
        let zero = RealField::zeros(*grid);
        match self.kind {
            ForcingKind::None => (zero.clone(), zero),
            ForcingKind::KolmogorovSin => (RealField::from_fn(*grid, |_, y| -4.0 * (4.0 * y).cos()), zero),
            ForcingKind::KochkovCos => (RealField::from_fn(*grid, |_, y| 16.0 * (4.0 * y).sin()), zero),
            ForcingKind::TorusLi => (
                RealField::from_fn(*grid, |x, y| {
                    let a = 2.0 * PI * (x + y);
                    0.1 * (a.sin() + a.cos())
                }),
                zero,
            ),
            ForcingKind::TorusRandom => {
                let amp = self.amplitudes.as_ref().expect("validated");
                let a = RealField::from_fn(*grid, |x, y| random_sum(amp, x, y, false));
                let b = RealField::from_fn(*grid, |x, y| random_sum(amp, x, y, true));
                (a, b)
            }
        }
    }

    /// Spectra of [`Self::source_components`] with the mean removed.
    pub(crate) fn source_spectra(&self, grid: &Grid2) -> (SpectralField, SpectralField) {
        let (a, b) = self.source_components(grid);
        let mut sa = fft2_forward_unchecked(&a);
        let mut sb = fft2_forward_unchecked(&b);
        sa.coeffs_mut()[0] = num_complex::Complex64::new(0.0, 0.0);
        sb.coeffs_mut()[0] = num_complex::Complex64::new(0.0, 0.0);
        (sa, sb)
    }
}

/// `0.1 * sum alpha sin(theta + phase) + beta cos(theta + phase)`, expanded in
/// `phase`: the `cos(phase)` coefficient, or the `sin(phase)` one when `shifted`.
fn random_sum(amp: &ForcingAmplitudes, x: f64, y: f64, shifted: bool) -> f64 {
    let mut acc = 0.0;
    for p in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let theta = 2.0 * PI * (p + 1) as f64 * (i as f64 * x + j as f64 * y);
                let (al, be) = (amp.alpha[p][i][j], amp.beta[p][i][j]);
                acc += if shifted {
                    al * theta.cos() - be * theta.sin()
                } else {
                    al * theta.sin() + be * theta.cos()
                };
            }
        }
    }
    0.1 * acc
}
