use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FfnoError, InputOptions};
use crate::autodiff::{ModeAxes, Tape, Tensor, Var};

/// Placement of the residual connection and activation in an operator layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerStyle {
    /// `z + relu(W2 relu(W1 K(z) + b1) + b2)`
    #[default]
    ResidualAfterActivation,
    /// `relu(W z + b + K(z))`, no residual.
    Classic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FfnoConfig {
    pub layers: usize,
    pub hidden: usize,
    /// Fourier modes kept per dimension.
    pub modes: usize,
    #[serde(default)]
    pub inputs: InputOptions,
    #[serde(default = "one")]
    pub out_channels: usize,
    #[serde(default)]
    pub weight_sharing: bool,
    /// `false` selects the joint two-dimensional spectral weights of the original FNO.
    #[serde(default = "yes")]
    pub factorized: bool,
    #[serde(default)]
    pub style: LayerStyle,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl FfnoConfig {
    pub fn new(layers: usize, hidden: usize, modes: usize) -> Self {
        Self {
            layers,
            hidden,
            modes,
            inputs: InputOptions::default(),
            out_channels: 1,
            weight_sharing: false,
            factorized: true,
            style: LayerStyle::ResidualAfterActivation,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.inputs.channel_count()
    }

    pub fn validate(&self) -> Result<(), FfnoError> {
        for (name, v) in [("layers", self.layers), ("hidden", self.hidden), ("modes", self.modes), ("out_channels", self.out_channels)] {
            if v == 0 {
                return Err(FfnoError::Config(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Name and shape of every parameter, in storage order.
    pub fn parameter_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (h, m, c) = (self.hidden, self.modes, self.in_channels());
        let mut out = vec![("lift.w".to_string(), vec![h, c]), ("lift.b".to_string(), vec![h])];
        let spectral = |prefix: &str| -> Vec<(String, Vec<usize>)> {
            if self.factorized {
                vec![(format!("{prefix}.rx"), vec![m, h, h, 2]), (format!("{prefix}.ry"), vec![m, h, h, 2])]
            } else {
                vec![(format!("{prefix}.r"), vec![m, m, h, h, 2])]
            }
        };
        if self.weight_sharing {
            out.extend(spectral("shared"));
        }
        for l in 0..self.layers {
            let p = format!("layer{l}");
            if !self.weight_sharing {
                out.extend(spectral(&p));
            }
            out.push((format!("{p}.w1"), vec![h, h]));
            out.push((format!("{p}.b1"), vec![h]));
            if self.style == LayerStyle::ResidualAfterActivation {
                out.push((format!("{p}.w2"), vec![h, h]));
                out.push((format!("{p}.b2"), vec![h]));
            }
        }
        out.extend([
            ("proj.w1".to_string(), vec![h, h]),
            ("proj.b1".to_string(), vec![h]),
            ("proj.w2".to_string(), vec![self.out_channels, h]),
            ("proj.b2".to_string(), vec![self.out_channels]),
        ]);
        out
    }
}

fn is_spectral(name: &str) -> bool {
    name.ends_with(".rx") || name.ends_with(".ry") || name.ends_with(".r")
}

/// Real parameter counts by enumeration of the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParameterCount {
    pub spectral: usize,
    pub other: usize,
}

impl ParameterCount {
    pub fn total(&self) -> usize {
        self.spectral + self.other
    }
}

pub fn parameter_count(cfg: &FfnoConfig) -> ParameterCount {
    cfg.parameter_shapes().iter().fold(ParameterCount { spectral: 0, other: 0 }, |mut acc, (name, shape)| {
        let n: usize = shape.iter().product();
        if is_spectral(name) {
            acc.spectral += n;
        } else {
            acc.other += n;
        }
        acc
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FfnoModel {
    config: FfnoConfig,
    names: Vec<String>,
    params: Vec<Tensor>,
}

/// Tape handles for every parameter of a model, in storage order.
#[derive(Debug, Clone)]
pub struct ModelVars(pub Vec<Var>);

struct LayerVars {
    spectral: (Var, Option<Var>),
    w1: Var,
    b1: Var,
    w2: Option<(Var, Var)>,
}

impl FfnoModel {
    /// Random initialization: spectral weights uniform in `±1/(H sqrt(M))`
    /// (real and imaginary parts), pointwise weights and biases uniform in
    /// `±1/sqrt(fan_in)`.
    pub fn init<R: Rng + ?Sized>(config: FfnoConfig, rng: &mut R) -> Result<Self, FfnoError> {
        config.validate()?;
        let spectral_scale = 1.0 / (config.hidden as f64 * (config.modes as f64).sqrt());
        let mut names = Vec::new();
        let mut params = Vec::new();
        let shapes = config.parameter_shapes();
        for (i, (name, shape)) in shapes.iter().enumerate() {
            let bound = if is_spectral(name) {
                spectral_scale
            } else {
                // biases share the fan-in of the weight stored just before them
                let w = if shape.len() == 1 { &shapes[i - 1].1 } else { shape };
                1.0 / (w[1] as f64).sqrt()
            };
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
            names.push(name.clone());
            params.push(Tensor::new(shape.clone(), data).expect("finite init"));
        }
        Ok(Self { config, names, params })
    }

    pub fn zeros(config: FfnoConfig) -> Result<Self, FfnoError> {
        config.validate()?;
        let (names, params) = config.parameter_shapes().into_iter().map(|(n, s)| (n, Tensor::zeros(&s))).unzip();
        Ok(Self { config, names, params })
    }

    /// Rebuilds a model from stored parameters, checking names and shapes.
    pub fn from_parameters(config: FfnoConfig, mut named: Vec<(String, Tensor)>) -> Result<Self, FfnoError> {
        config.validate()?;
        let shapes = config.parameter_shapes();
        let mut params = Vec::with_capacity(shapes.len());
        for (name, shape) in &shapes {
            let pos = named
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| FfnoError::Config(format!("missing parameter {name:?}")))?;
            let (_, t) = named.swap_remove(pos);
            if t.shape() != &shape[..] {
                return Err(FfnoError::Config(format!("parameter {name:?}: shape {:?}, expected {shape:?}", t.shape())));
            }
            if !t.is_finite() {
                return Err(FfnoError::Config(format!("parameter {name:?} has non-finite values")));
            }
            params.push(t);
        }
        if let Some((n, _)) = named.first() {
            return Err(FfnoError::Config(format!("unexpected parameter {n:?}")));
        }
        Ok(Self { config, names: shapes.into_iter().map(|(n, _)| n).collect(), params })
    }

    pub fn config(&self) -> &FfnoConfig {
        &self.config
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &mut self.params[i])
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Puts every parameter on the tape, as trainable leaves or as constants.
    pub fn record(&self, tape: &mut Tape, trainable: bool) -> ModelVars {
        ModelVars(
            self.params
                .iter()
                .map(|p| if trainable { tape.param(p.clone()) } else { tape.constant(p.clone()) })
                .collect(),
        )
    }

    fn var(&self, vars: &ModelVars, name: &str) -> Var {
        let i = self.names.iter().position(|n| n == name).expect("parameter exists");
        vars.0[i]
    }

    fn layer_vars(&self, vars: &ModelVars, l: usize) -> LayerVars {
        let p = format!("layer{l}");
        let sp = if self.config.weight_sharing { "shared".to_string() } else { p.clone() };
        let spectral = if self.config.factorized {
            (self.var(vars, &format!("{sp}.rx")), Some(self.var(vars, &format!("{sp}.ry"))))
        } else {
            (self.var(vars, &format!("{sp}.r")), None)
        };
        let w2 = (self.config.style == LayerStyle::ResidualAfterActivation)
            .then(|| (self.var(vars, &format!("{p}.w2")), self.var(vars, &format!("{p}.b2"))));
        LayerVars { spectral, w1: self.var(vars, &format!("{p}.w1")), b1: self.var(vars, &format!("{p}.b1")), w2 }
    }

    pub fn check_grid(&self, ny: usize, nx: usize) -> Result<(), FfnoError> {
        let m = self.config.modes;
        if nx < 2 * m || ny < 2 * m || nx % 2 != 0 || ny % 2 != 0 {
            return Err(FfnoError::GridTooSmall { nx, ny, modes: m });
        }
        Ok(())
    }

    fn kernel_on(&self, tape: &mut Tape, z: Var, spectral: (Var, Option<Var>)) -> Result<Var, FfnoError> {
        let m = self.config.modes;
        let shape = tape.value(z).shape().to_vec();
        if shape.len() != 3 || shape[0] != self.config.hidden {
            return Err(FfnoError::Input(format!("expected [{}, ny, nx] latent, got {shape:?}", self.config.hidden)));
        }
        self.check_grid(shape[1], shape[2])?;
        Ok(match spectral {
            (rx, Some(ry)) => factorized_kernel(tape, z, rx, ry, m)?,
            (r, None) => joint_kernel(tape, z, r, m)?,
        })
    }

    /// Spectral kernel of layer `l` on a `[H, ny, nx]` latent field.
    pub fn spectral_kernel_on(&self, tape: &mut Tape, vars: &ModelVars, z: Var, l: usize) -> Result<Var, FfnoError> {
        let lv = self.layer_vars(vars, l);
        self.kernel_on(tape, z, lv.spectral)
    }

    pub fn layer_forward_on(&self, tape: &mut Tape, vars: &ModelVars, z: Var, l: usize) -> Result<Var, FfnoError> {
        let lv = self.layer_vars(vars, l);
        let k = self.kernel_on(tape, z, lv.spectral)?;
        Ok(match lv.w2 {
            Some((w2, b2)) => {
                let h = tape.matmul_pointwise(k, lv.w1, Some(lv.b1))?;
                let h = tape.relu(h);
                let h = tape.matmul_pointwise(h, w2, Some(b2))?;
                let h = tape.relu(h);
                tape.add(z, h)?
            }
            None => {
                let h = tape.matmul_pointwise(z, lv.w1, Some(lv.b1))?;
                let h = tape.add(h, k)?;
                tape.relu(h)
            }
        })
    }

    /// Lifting, all operator layers and projection on a `[C_in, ny, nx]` input.
    pub fn forward_on(&self, tape: &mut Tape, vars: &ModelVars, input: Var) -> Result<Var, FfnoError> {
        let shape = tape.value(input).shape().to_vec();
        if shape.len() != 3 || shape[0] != self.config.in_channels() {
            return Err(FfnoError::Input(format!(
                "expected [{}, ny, nx] input, got {shape:?}",
                self.config.in_channels()
            )));
        }
        self.check_grid(shape[1], shape[2])?;
        let mut z = tape.matmul_pointwise(input, self.var(vars, "lift.w"), Some(self.var(vars, "lift.b")))?;
        for l in 0..self.config.layers {
            z = self.layer_forward_on(tape, vars, z, l)?;
        }
        let h = tape.matmul_pointwise(z, self.var(vars, "proj.w1"), Some(self.var(vars, "proj.b1")))?;
        let h = tape.relu(h);
        Ok(tape.matmul_pointwise(h, self.var(vars, "proj.w2"), Some(self.var(vars, "proj.b2")))?)
    }
}

fn factorized_kernel(tape: &mut Tape, z: Var, rx: Var, ry: Var, m: usize) -> Result<Var, FfnoError> {
    let shape = tape.value(z).shape().to_vec();
    let (ny, nx) = (shape[1], shape[2]);
    let fx = tape.rdft_modes(z, 2, m)?;
    let fx = tape.complex_mode_mul(fx, rx, ModeAxes::Cols)?;
    let bx = tape.irdft_modes(fx, 2, nx)?;

    let fy = tape.rdft_modes(z, 1, m)?;
    let fy = tape.complex_mode_mul(fy, ry, ModeAxes::Rows)?;
    let by = tape.irdft_modes(fy, 1, ny)?;
    Ok(tape.add(bx, by)?)
}

/// Rows of the full `y` spectrum kept by the joint kernel: the `ceil(m/2)`
/// lowest non-negative and `floor(m/2)` lowest negative frequencies.
pub fn joint_row_modes(ny: usize, m: usize) -> Vec<usize> {
    (0..m.div_ceil(2)).chain(ny - m / 2..ny).collect()
}

fn joint_kernel(tape: &mut Tape, z: Var, r: Var, m: usize) -> Result<Var, FfnoError> {
    let shape = tape.value(z).shape().to_vec();
    let (ny, nx) = (shape[1], shape[2]);
    let rows = joint_row_modes(ny, m);
    let f = tape.rdft_modes(z, 2, m)?;
    let f = tape.cfft_dim(f, 1, false)?;
    let f = tape.gather_modes(f, 1, &rows)?;
    let f = tape.complex_mode_mul(f, r, ModeAxes::Both)?;
    let f = tape.scatter_modes(f, 1, &rows, ny)?;
    let f = tape.cfft_dim(f, 1, true)?;
    Ok(tape.irdft_modes(f, 2, nx)?)
}

fn eval_const(model: &FfnoModel, z: &Tensor, f: impl FnOnce(&mut Tape, &ModelVars, Var) -> Result<Var, FfnoError>) -> Result<Tensor, FfnoError> {
    let mut tape = Tape::new();
    let vars = model.record(&mut tape, false);
    let z = tape.constant(z.clone());
    let out = f(&mut tape, &vars, z)?;
    Ok(tape.value(out).clone())
}

pub fn spectral_kernel(z: &Tensor, model: &FfnoModel, layer: usize) -> Result<Tensor, FfnoError> {
    eval_const(model, z, |t, v, z| model.spectral_kernel_on(t, v, z, layer))
}

pub fn layer_forward(z: &Tensor, model: &FfnoModel, layer: usize) -> Result<Tensor, FfnoError> {
    eval_const(model, z, |t, v, z| model.layer_forward_on(t, v, z, layer))
}

pub fn model_forward(inputs: &Tensor, model: &FfnoModel) -> Result<Tensor, FfnoError> {
    eval_const(model, inputs, |t, v, z| model.forward_on(t, v, z))
}
