use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::solver::ForcingSpec;
use crate::spectral::{Grid2, RealField};

/// Which channels accompany the vorticity in the operator input. Channel
/// order is fixed: vorticity, x, y, viscosity, force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputOptions {
    pub coordinates: bool,
    pub viscosity: bool,
    pub forcing: bool,
}

/// Per-frame context needed to fill the optional channels.
#[derive(Debug, Clone, Copy)]
pub struct FrameContext<'a> {
    pub nu: f64,
    pub forcing: &'a ForcingSpec,
    pub t: f64,
}

impl InputOptions {
    pub fn with_coordinates() -> Self {
        Self { coordinates: true, ..Self::default() }
    }

    pub fn channel_count(&self) -> usize {
        1 + 2 * self.coordinates as usize + self.viscosity as usize + self.forcing as usize
    }

    pub fn channel_names(&self) -> Vec<&'static str> {
        let mut names = vec!["vorticity"];
        if self.coordinates {
            names.extend(["x", "y"]);
        }
        if self.viscosity {
            names.push("viscosity");
        }
        if self.forcing {
            names.push("force");
        }
        names
    }
}

/// Stacks the configured channels into a `[C, ny, nx]` tensor.
pub fn build_input_channels(omega: &RealField, opts: &InputOptions, ctx: &FrameContext<'_>) -> Tensor {
    let grid: Grid2 = *omega.grid();
    let n = grid.len();
    let mut data = Vec::with_capacity(opts.channel_count() * n);
    data.extend_from_slice(omega.values());
    if opts.coordinates {
        for _ in 0..grid.ny() {
            data.extend((0..grid.nx()).map(|i| grid.x(i)));
        }
        for j in 0..grid.ny() {
            data.extend(std::iter::repeat(grid.y(j)).take(grid.nx()));
        }
    }
    if opts.viscosity {
        data.extend(std::iter::repeat(ctx.nu).take(n));
    }
    if opts.forcing {
        data.extend_from_slice(ctx.forcing.vorticity_source(&grid, ctx.t).values());
    }
    Tensor::from_parts(vec![opts.channel_count(), grid.ny(), grid.nx()], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{ForcingAmplitudes, ForcingSpec};

    #[test]
    fn channel_counts() {
        assert_eq!(InputOptions::default().channel_count(), 1);
        assert_eq!(InputOptions::with_coordinates().channel_count(), 3);
        let full = InputOptions { coordinates: true, viscosity: true, forcing: true };
        assert_eq!(full.channel_count(), 5);
        assert_eq!(full.channel_names(), vec!["vorticity", "x", "y", "viscosity", "force"]);
    }

    #[test]
    fn channel_values() {
        let g = Grid2::new(8, 4, 2.0, 1.0).unwrap();
        let omega = RealField::from_fn(g, |x, y| x + 10.0 * y);
        let forcing = ForcingSpec::torus_random(
            ForcingAmplitudes { alpha: [[[0.3; 2]; 2]; 2], beta: [[[0.6; 2]; 2]; 2] },
            0.2,
        );
        let opts = InputOptions { coordinates: true, viscosity: true, forcing: true };
        let ctx = FrameContext { nu: 3e-5, forcing: &forcing, t: 1.5 };
        let t = build_input_channels(&omega, &opts, &ctx);
        assert_eq!(t.shape(), &[5, 4, 8]);
        let at = |c: usize, j: usize, i: usize| t.data()[(c * 4 + j) * 8 + i];
        for j in 0..4 {
            for i in 0..8 {
                assert_eq!(at(0, j, i), omega.get(i, j));
                assert_eq!(at(1, j, i), i as f64 * 2.0 / 8.0);
                assert_eq!(at(2, j, i), j as f64 * 1.0 / 4.0);
                assert_eq!(at(3, j, i), 3e-5);
                assert_eq!(at(4, j, i), forcing.vorticity_source(&g, 1.5).get(i, j));
            }
        }
    }
}
