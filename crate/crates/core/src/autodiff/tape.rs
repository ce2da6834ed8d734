use super::dft;
use super::lines::{self, Lines};
use super::{AutodiffError, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Which axes of a `[C, A, B, 2]` complex tensor index the weights of
/// [`Tape::complex_mode_mul`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeAxes {
    /// Weights `[A, Cout, Cin, 2]`, shared along `B`.
    Rows,
    /// Weights `[B, Cout, Cin, 2]`, shared along `A`.
    Cols,
    /// Weights `[A, B, Cout, Cin, 2]`.
    Both,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Affine { x: Var, scale: f64 },
    Relu(Var),
    Sum(Var),
    MatmulPointwise { x: Var, w: Var, b: Option<Var> },
    Rfft { x: Var, axis: usize },
    Irfft { x: Var, axis: usize },
    Cfft { x: Var, axis: usize, inverse: bool },
    Rdft { x: Var, axis: usize, m: usize },
    Irdft { x: Var, axis: usize, m: usize },
    Gather { x: Var, axis: usize, indices: Vec<usize> },
    Scatter { x: Var, axis: usize, indices: Vec<usize> },
    ModeMul { x: Var, r: Var, axes: ModeAxes },
    MseNorm { pred: Var, target: Var },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records operations in execution order; the order is a topological sort
/// of the graph, so backward is a single reverse sweep.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node that requires one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn shape_err(op: &str, a: &[usize], b: &[usize]) -> AutodiffError {
    AutodiffError::Shape(format!("{op}: incompatible shapes {a:?} and {b:?}"))
}

fn check_axis(op: &str, shape: &[usize], axis: usize, complex: bool) -> Result<(), AutodiffError> {
    let spatial = if complex { shape.len().saturating_sub(1) } else { shape.len() };
    if complex && shape.last() != Some(&2) {
        return Err(AutodiffError::Shape(format!("{op}: expected interleaved complex tensor, got shape {shape:?}")));
    }
    if axis >= spatial {
        return Err(AutodiffError::Shape(format!("{op}: axis {axis} out of range for shape {shape:?}")));
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// A constant input.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: false });
        Var(self.nodes.len() - 1)
    }

    /// A leaf whose gradient is wanted.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: true });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn same_shape(&self, op: &str, a: Var, b: Var) -> Result<(), AutodiffError> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("add", a, b)?;
        let (x, y) = (self.value(a), self.value(b));
        let data = x.data().iter().zip(y.data()).map(|(p, q)| p + q).collect();
        let value = Tensor::from_parts(x.shape().to_vec(), data);
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let (x, y) = (self.value(a), self.value(b));
        let data = x.data().iter().zip(y.data()).map(|(p, q)| p * q).collect();
        let value = Tensor::from_parts(x.shape().to_vec(), data);
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    /// `scale * x + shift` elementwise.
    pub fn affine_scalar(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let value = self.value(x).map(|v| scale * v + shift);
        self.push(value, Op::Affine { x, scale }, &[x])
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        self.push(value, Op::Relu(x), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).data().iter().sum());
        self.push(value, Op::Sum(x), &[x])
    }

    /// Channel mixing at every grid point: `x` is `[Cin, ...]`, `w` is
    /// `[Cout, Cin]`, the optional bias `[Cout]`; the result is `[Cout, ...]`.
    pub fn matmul_pointwise(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var, AutodiffError> {
        let (xs, ws) = (self.shape(x), self.shape(w));
        if xs.is_empty() || ws.len() != 2 || ws[1] != xs[0] {
            return Err(shape_err("matmul_pointwise", xs, ws));
        }
        let (cout, cin) = (ws[0], ws[1]);
        if let Some(b) = b {
            if self.shape(b) != [cout] {
                return Err(shape_err("matmul_pointwise bias", self.shape(b), &[cout]));
            }
        }
        let p = self.value(x).len() / cin.max(1);
        let mut out = vec![0.0; cout * p];
        if let Some(b) = b {
            for (row, &bias) in out.chunks_exact_mut(p).zip(self.value(b).data()) {
                row.fill(bias);
            }
        }
        gemm(1.0, cout, cin, p, self.value(w).data(), false, self.value(x).data(), false, 1.0, &mut out);
        let mut shape = xs.to_vec();
        shape[0] = cout;
        let inputs: Vec<Var> = [Some(x), Some(w), b].into_iter().flatten().collect();
        Ok(self.push(Tensor::from_parts(shape, out), Op::MatmulPointwise { x, w, b }, &inputs))
    }

    /// Real FFT along `axis` (even length `n`), producing frequencies
    /// `0..=n/2` as an interleaved complex tensor.
    pub fn rfft_dim(&mut self, x: Var, axis: usize) -> Result<Var, AutodiffError> {
        let shape = self.shape(x).to_vec();
        check_axis("rfft_dim", &shape, axis, false)?;
        if shape[axis] % 2 != 0 || shape[axis] < 2 {
            return Err(AutodiffError::Shape(format!("rfft_dim: axis {axis} of {shape:?} must have even length")));
        }
        let data = lines::rfft(self.value(x).data(), Lines::of(&shape, axis));
        let mut out = shape.clone();
        out[axis] = shape[axis] / 2 + 1;
        out.push(2);
        Ok(self.push(Tensor::from_parts(out, data), Op::Rfft { x, axis }, &[x]))
    }

    /// Inverse of [`Tape::rfft_dim`] back to a real axis of even length `n`.
    pub fn irfft_dim(&mut self, x: Var, axis: usize, n: usize) -> Result<Var, AutodiffError> {
        let shape = self.shape(x).to_vec();
        check_axis("irfft_dim", &shape, axis, true)?;
        if n % 2 != 0 || n < 2 || shape[axis] != n / 2 + 1 {
            return Err(AutodiffError::Shape(format!(
                "irfft_dim: axis {axis} of {shape:?} must hold n/2+1 frequencies for even n = {n}"
            )));
        }
        let mut l = Lines::of_complex(&shape, axis);
        l.n = n;
        let data = lines::irfft(self.value(x).data(), l);
        let mut out = shape[..shape.len() - 1].to_vec();
        out[axis] = n;
        Ok(self.push(Tensor::from_parts(out, data), Op::Irfft { x, axis }, &[x]))
    }

    /// The lowest `m` frequencies of the real DFT along `axis`; equal to
    /// `slice_modes(rfft_dim(x, axis), axis, m)`.
    pub fn rdft_modes(&mut self, x: Var, axis: usize, m: usize) -> Result<Var, AutodiffError> {
        let shape = self.shape(x).to_vec();
        check_axis("rdft_modes", &shape, axis, false)?;
        let n = shape[axis];
        if n % 2 != 0 || n < 2 || m == 0 || m > n / 2 + 1 {
            return Err(AutodiffError::Shape(format!(
                "rdft_modes: {m} modes along axis {axis} of {shape:?} (needs even length and 1..=n/2+1 modes)"
            )));
        }
        let data = dft::forward(self.value(x).data(), Lines::of(&shape, axis), m);
        let mut out = shape;
        out[axis] = m;
        out.push(2);
        Ok(self.push(Tensor::from_parts(out, data), Op::Rdft { x, axis, m }, &[x]))
    }

    /// Real signal of even length `n` along `axis` from its lowest frequencies;
    /// equal to `irfft_dim(pad_modes(x, axis, n/2+1), axis, n)`.
    pub fn irdft_modes(&mut self, x: Var, axis: usize, n: usize) -> Result<Var, AutodiffError> {
        let shape = self.shape(x).to_vec();
        check_axis("irdft_modes", &shape, axis, true)?;
        let m = shape[axis];
        if n % 2 != 0 || n < 2 || m == 0 || m > n / 2 + 1 {
            return Err(AutodiffError::Shape(format!(
                "irdft_modes: axis {axis} of {shape:?} cannot hold the lowest modes of even length {n}"
            )));
        }
        let mut l = Lines::of_complex(&shape, axis);
        l.n = n;
        let data = dft::inverse(self.value(x).data(), l, m);
        let mut out = shape[..shape.len() - 1].to_vec();
        out[axis] = n;
        Ok(self.push(Tensor::from_parts(out, data), Op::Irdft { x, axis, m }, &[x]))
    }

    /// Complex FFT along `axis`; the inverse includes the `1/n` factor.
    pub fn cfft_dim(&mut self, x: Var, axis: usize, inverse: bool) -> Result<Var, AutodiffError> {
        let shape = self.shape(x).to_vec();
        check_axis("cfft_dim", &shape, axis, true)?;
        let l = Lines::of_complex(&shape, axis);
        let scale = if inverse { 1.0 / l.n as f64 } else { 1.0 };
        let data = lines::cfft(self.value(x).data(), l, inverse, scale);
        Ok(self.push(Tensor::from_parts(shape, data), Op::Cfft { x, axis, inverse }, &[x]))
    }

    /// Keeps the entries `indices` (distinct, in the given order) along `axis`.
    pub fn gather_modes(&mut self, x: Var, axis: usize, indices: &[usize]) -> Result<Var, AutodiffError> {
        let shape = self.shape(x).to_vec();
        check_indices("gather_modes", &shape, axis, indices, shape.get(axis).copied().unwrap_or(0))?;
        let l = Lines::of(&shape, axis);
        let src = self.value(x).data();
        let mut data = vec![0.0; l.outer * indices.len() * l.inner];
        for o in 0..l.outer {
            for (m, &k) in indices.iter().enumerate() {
                let s = (o * l.n + k) * l.inner;
                let d = (o * indices.len() + m) * l.inner;
                data[d..d + l.inner].copy_from_slice(&src[s..s + l.inner]);
            }
        }
        let mut out = shape;
        out[axis] = indices.len();
        let op = Op::Gather { x, axis, indices: indices.to_vec() };
        Ok(self.push(Tensor::from_parts(out, data), op, &[x]))
    }

    /// Lowest `m` entries along `axis`.
    pub fn slice_modes(&mut self, x: Var, axis: usize, m: usize) -> Result<Var, AutodiffError> {
        self.gather_modes(x, axis, &(0..m).collect::<Vec<_>>())
    }

    /// Places the entries of `x` along `axis` at `indices` of a zero axis of length `n`.
    pub fn scatter_modes(&mut self, x: Var, axis: usize, indices: &[usize], n: usize) -> Result<Var, AutodiffError> {
        let shape = self.shape(x).to_vec();
        check_indices("scatter_modes", &shape, axis, indices, n)?;
        if shape[axis] != indices.len() {
            return Err(AutodiffError::Shape(format!(
                "scatter_modes: axis {axis} of {shape:?} does not match {} indices",
                indices.len()
            )));
        }
        let l = Lines::of(&shape, axis);
        let src = self.value(x).data();
        let mut data = vec![0.0; l.outer * n * l.inner];
        for o in 0..l.outer {
            for (m, &k) in indices.iter().enumerate() {
                let s = (o * l.n + m) * l.inner;
                let d = (o * n + k) * l.inner;
                data[d..d + l.inner].copy_from_slice(&src[s..s + l.inner]);
            }
        }
        let mut out = shape;
        out[axis] = n;
        let op = Op::Scatter { x, axis, indices: indices.to_vec() };
        Ok(self.push(Tensor::from_parts(out, data), op, &[x]))
    }

    /// Zero-pads the lowest entries along `axis` back to length `n`.
    pub fn pad_modes(&mut self, x: Var, axis: usize, n: usize) -> Result<Var, AutodiffError> {
        let m = self.shape(x).get(axis).copied().unwrap_or(0);
        self.scatter_modes(x, axis, &(0..m).collect::<Vec<_>>(), n)
    }

    /// Per-mode complex channel contraction `y[o,a,b] = sum_i R[mode(a,b),o,i] x[i,a,b]`
    /// for `x` of shape `[Cin, A, B, 2]`.
    pub fn complex_mode_mul(&mut self, x: Var, r: Var, axes: ModeAxes) -> Result<Var, AutodiffError> {
        let (xs, rs) = (self.shape(x).to_vec(), self.shape(r).to_vec());
        let geom = ModeGeom::new(&xs, &rs, axes).ok_or_else(|| shape_err("complex_mode_mul", &xs, &rs))?;
        let (xd, rw) = (self.value(x).data(), self.value(r).data());
        let (cin, cout, np) = (geom.cin, geom.cout, geom.group_len());
        let mut data = vec![0.0; 2 * cout * geom.points()];
        let (mut xr, mut xi) = (vec![0.0; cin * np], vec![0.0; cin * np]);
        let (mut yr, mut yi) = (vec![0.0; cout * np], vec![0.0; cout * np]);
        for grp in 0..geom.groups() {
            let (wr, wi) = geom.weights(rw, grp);
            geom.gather(xd, cin, grp, &mut xr, &mut xi);
            gemm(1.0, cout, cin, np, &wr, false, &xr, false, 0.0, &mut yr);
            gemm(-1.0, cout, cin, np, &wi, false, &xi, false, 1.0, &mut yr);
            gemm(1.0, cout, cin, np, &wr, false, &xi, false, 0.0, &mut yi);
            gemm(1.0, cout, cin, np, &wi, false, &xr, false, 1.0, &mut yi);
            geom.scatter(&yr, &yi, cout, grp, &mut data);
        }
        let mut out = xs.clone();
        out[0] = geom.cout;
        Ok(self.push(Tensor::from_parts(out, data), Op::ModeMul { x, r, axes }, &[x, r]))
    }

    /// `||pred - target||_2 / ||target||_2` for one sample.
    pub fn mse_norm(&mut self, pred: Var, target: Var) -> Result<Var, AutodiffError> {
        self.same_shape("mse_norm", pred, target)?;
        let (p, t) = (self.value(pred), self.value(target));
        let tn = t.l2_norm();
        if tn == 0.0 {
            return Err(AutodiffError::ZeroNorm);
        }
        let diff: f64 = p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.push(Tensor::scalar(diff.sqrt() / tn), Op::MseNorm { pred, target }, &[pred, target]))
    }

    /// Reverse sweep from a one-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, AutodiffError> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(AutodiffError::NotScalar(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));
        for id in (0..=loss.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, shape: &[usize], data: Vec<f64>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(t) => t.data_mut().iter_mut().zip(&data).for_each(|(a, b)| *a += b),
            slot => *slot = Some(Tensor::from_parts(shape.to_vec(), data)),
        }
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let gd = g.data();
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.shape(), gd.to_vec());
                self.accumulate(grads, *b, g.shape(), gd.to_vec());
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate(grads, *a, g.shape(), gd.iter().zip(y).map(|(g, y)| g * y).collect());
                self.accumulate(grads, *b, g.shape(), gd.iter().zip(x).map(|(g, x)| g * x).collect());
            }
            Op::Affine { x, scale } => {
                self.accumulate(grads, *x, g.shape(), gd.iter().map(|g| g * scale).collect());
            }
            Op::Relu(x) => {
                let xv = self.value(*x).data();
                let d = gd.iter().zip(xv).map(|(g, &x)| if x > 0.0 { *g } else { 0.0 }).collect();
                self.accumulate(grads, *x, g.shape(), d);
            }
            Op::Sum(x) => {
                let xs = self.shape(*x);
                self.accumulate(grads, *x, xs, vec![gd[0]; self.value(*x).len()]);
            }
            Op::MatmulPointwise { x, w, b } => {
                let ws = self.shape(*w);
                let (cout, cin) = (ws[0], ws[1]);
                let p = gd.len() / cout.max(1);
                if self.requires_grad(*x) {
                    let mut gx = vec![0.0; cin * p];
                    gemm(1.0, cin, cout, p, self.value(*w).data(), true, gd, false, 0.0, &mut gx);
                    self.accumulate(grads, *x, self.shape(*x), gx);
                }
                if self.requires_grad(*w) {
                    let mut gw = vec![0.0; cout * cin];
                    gemm(1.0, cout, p, cin, gd, false, self.value(*x).data(), true, 0.0, &mut gw);
                    self.accumulate(grads, *w, ws, gw);
                }
                if let Some(b) = b {
                    let gb = gd.chunks_exact(p).map(|row| row.iter().sum()).collect();
                    self.accumulate(grads, *b, &[cout], gb);
                }
            }
            Op::Rfft { x, axis } => {
                let l = Lines::of(self.shape(*x), *axis);
                self.accumulate(grads, *x, self.shape(*x), lines::rfft_adjoint(gd, l));
            }
            Op::Irfft { x, axis } => {
                let l = Lines::of(g.shape(), *axis);
                self.accumulate(grads, *x, self.shape(*x), lines::irfft_adjoint(gd, l));
            }
            Op::Cfft { x, axis, inverse } => {
                let l = Lines::of_complex(g.shape(), *axis);
                // The adjoint of the unnormalized DFT is the unnormalized inverse.
                let scale = if *inverse { 1.0 / l.n as f64 } else { 1.0 };
                self.accumulate(grads, *x, self.shape(*x), lines::cfft(gd, l, !inverse, scale));
            }
            Op::Rdft { x, axis, m } => {
                let l = Lines::of(self.shape(*x), *axis);
                self.accumulate(grads, *x, self.shape(*x), dft::forward_adjoint(gd, l, *m));
            }
            Op::Irdft { x, axis, m } => {
                let l = Lines::of(g.shape(), *axis);
                self.accumulate(grads, *x, self.shape(*x), dft::inverse_adjoint(gd, l, *m));
            }
            Op::Gather { x, axis, indices } => {
                let xs = self.shape(*x);
                let l = Lines::of(xs, *axis);
                let mut gx = vec![0.0; self.value(*x).len()];
                for o in 0..l.outer {
                    for (m, &k) in indices.iter().enumerate() {
                        let s = (o * indices.len() + m) * l.inner;
                        let d = (o * l.n + k) * l.inner;
                        gx[d..d + l.inner].iter_mut().zip(&gd[s..s + l.inner]).for_each(|(a, b)| *a += b);
                    }
                }
                self.accumulate(grads, *x, xs, gx);
            }
            Op::Scatter { x, axis, indices } => {
                let xs = self.shape(*x);
                let l = Lines::of(g.shape(), *axis);
                let mut gx = vec![0.0; self.value(*x).len()];
                for o in 0..l.outer {
                    for (m, &k) in indices.iter().enumerate() {
                        let s = (o * l.n + k) * l.inner;
                        let d = (o * indices.len() + m) * l.inner;
                        gx[d..d + l.inner].copy_from_slice(&gd[s..s + l.inner]);
                    }
                }
                self.accumulate(grads, *x, xs, gx);
            }
            Op::ModeMul { x, r, axes } => {
                let (xs, rs) = (self.shape(*x), self.shape(*r));
                let geom = ModeGeom::new(xs, rs, *axes).expect("validated on record");
                let (cin, cout, np) = (geom.cin, geom.cout, geom.group_len());
                let (need_x, need_r) = (self.requires_grad(*x), self.requires_grad(*r));
                let (xd, rw) = (self.value(*x).data(), self.value(*r).data());
                let mut gx = vec![0.0; if need_x { xd.len() } else { 0 }];
                let mut gr = vec![0.0; if need_r { rw.len() } else { 0 }];
                let (mut gyr, mut gyi) = (vec![0.0; cout * np], vec![0.0; cout * np]);
                let (mut ar, mut ai) = (vec![0.0; cin * np], vec![0.0; cin * np]);
                let (mut wgr, mut wgi) = (vec![0.0; cout * cin], vec![0.0; cout * cin]);
                for grp in 0..geom.groups() {
                    geom.gather(gd, cout, grp, &mut gyr, &mut gyi);
                    if need_x {
                        // conj(R)^T gy
                        let (wr, wi) = geom.weights(rw, grp);
                        gemm(1.0, cin, cout, np, &wr, true, &gyr, false, 0.0, &mut ar);
                        gemm(1.0, cin, cout, np, &wi, true, &gyi, false, 1.0, &mut ar);
                        gemm(1.0, cin, cout, np, &wr, true, &gyi, false, 0.0, &mut ai);
                        gemm(-1.0, cin, cout, np, &wi, true, &gyr, false, 1.0, &mut ai);
                        geom.scatter(&ar, &ai, cin, grp, &mut gx);
                    }
                    if need_r {
                        // gy conj(x)^T
                        geom.gather(xd, cin, grp, &mut ar, &mut ai);
                        gemm(1.0, cout, np, cin, &gyr, false, &ar, true, 0.0, &mut wgr);
                        gemm(1.0, cout, np, cin, &gyi, false, &ai, true, 1.0, &mut wgr);
                        gemm(1.0, cout, np, cin, &gyi, false, &ar, true, 0.0, &mut wgi);
                        gemm(-1.0, cout, np, cin, &gyr, false, &ai, true, 1.0, &mut wgi);
                        geom.set_weights(&wgr, &wgi, grp, &mut gr);
                    }
                }
                if need_x {
                    self.accumulate(grads, *x, xs, gx);
                }
                if need_r {
                    self.accumulate(grads, *r, rs, gr);
                }
            }
            Op::MseNorm { pred, target } => {
                let (p, t) = (self.value(*pred).data(), self.value(*target).data());
                let tn = self.value(*target).l2_norm();
                let dn: f64 = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let shape = self.shape(*pred);
                // At pred == target the norm has a kink; take the zero subgradient.
                let c = if dn > 0.0 { gd[0] / (dn * tn) } else { 0.0 };
                let gp: Vec<f64> = p.iter().zip(t).map(|(a, b)| c * (a - b)).collect();
                if self.requires_grad(*target) {
                    let k = gd[0] * dn / (tn * tn * tn);
                    let gt = gp.iter().zip(t).map(|(g, b)| -g - k * b).collect();
                    self.accumulate(grads, *target, shape, gt);
                }
                self.accumulate(grads, *pred, shape, gp);
            }
        }
    }
}

fn check_indices(op: &str, shape: &[usize], axis: usize, indices: &[usize], n: usize) -> Result<(), AutodiffError> {
    if axis >= shape.len() {
        return Err(AutodiffError::Shape(format!("{op}: axis {axis} out of range for shape {shape:?}")));
    }
    let mut seen = vec![false; n];
    for &k in indices {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(AutodiffError::Shape(format!("{op}: index {k} repeated or out of range 0..{n}")));
        }
    }
    Ok(())
}

/// Layout helper for the mode contraction: points of `[C, A, B, 2]` data that
/// share a weight matrix are gathered into planar matrices and back.
struct ModeGeom {
    cin: usize,
    cout: usize,
    a: usize,
    b: usize,
    axes: ModeAxes,
}

impl ModeGeom {
    fn new(xs: &[usize], rs: &[usize], axes: ModeAxes) -> Option<Self> {
        let &[cin, a, b, 2] = xs else { return None };
        let modes: &[usize] = match axes {
            ModeAxes::Rows => &[a],
            ModeAxes::Cols => &[b],
            ModeAxes::Both => &[a, b],
        };
        let nm = modes.len();
        if rs.len() != nm + 3 || rs[..nm] != *modes || rs[nm + 1] != cin || rs[nm + 2] != 2 {
            return None;
        }
        let tail = &rs[nm..];
        Some(Self { cin, cout: tail[0], a, b, axes })
    }

    fn points(&self) -> usize {
        self.a * self.b
    }

    /// Points sharing one weight matrix.
    fn groups(&self) -> usize {
        match self.axes {
            ModeAxes::Rows => self.a,
            ModeAxes::Cols => self.b,
            ModeAxes::Both => self.a * self.b,
        }
    }

    fn group_len(&self) -> usize {
        self.points() / self.groups()
    }

    fn point(&self, grp: usize, q: usize) -> usize {
        match self.axes {
            ModeAxes::Rows => grp * self.b + q,
            ModeAxes::Cols => q * self.b + grp,
            ModeAxes::Both => grp,
        }
    }

    /// Real and imaginary `[c, group_len]` matrices of one group of `[c, A, B, 2]` data.
    fn gather(&self, data: &[f64], c: usize, grp: usize, re: &mut [f64], im: &mut [f64]) {
        let (np, len) = (self.points(), self.group_len());
        for ch in 0..c {
            for q in 0..len {
                let k = 2 * (ch * np + self.point(grp, q));
                re[ch * len + q] = data[k];
                im[ch * len + q] = data[k + 1];
            }
        }
    }

    fn scatter(&self, re: &[f64], im: &[f64], c: usize, grp: usize, data: &mut [f64]) {
        let (np, len) = (self.points(), self.group_len());
        for ch in 0..c {
            for q in 0..len {
                let k = 2 * (ch * np + self.point(grp, q));
                data[k] = re[ch * len + q];
                data[k + 1] = im[ch * len + q];
            }
        }
    }

    /// Real and imaginary `[cout, cin]` parts of one group's weights.
    fn weights(&self, r: &[f64], grp: usize) -> (Vec<f64>, Vec<f64>) {
        let w = &r[2 * grp * self.cout * self.cin..][..2 * self.cout * self.cin];
        (w.iter().step_by(2).copied().collect(), w.iter().skip(1).step_by(2).copied().collect())
    }

    fn set_weights(&self, re: &[f64], im: &[f64], grp: usize, r: &mut [f64]) {
        let w = &mut r[2 * grp * self.cout * self.cin..][..2 * self.cout * self.cin];
        for (k, pair) in w.chunks_exact_mut(2).enumerate() {
            pair[0] = re[k];
            pair[1] = im[k];
        }
    }
}

/// `c = alpha * op(a) * op(b) + beta * c` for row-major matrices, where `op(a)` is
/// `m x k` and `op(b)` is `k x n`.
#[allow(clippy::too_many_arguments)]
pub(super) fn gemm(alpha: f64, m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, beta: f64, c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    // a is stored m x k (or k x m when transposed); likewise b.
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn relu_values() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[2], &[-1.0, 2.0]));
        let y = tape.relu(x);
        assert_eq!(tape.value(y).data(), &[0.0, 2.0]);
    }

    #[test]
    fn square_gradient() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let y = tape.mul(x, x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().item(), 6.0);
    }

    #[test]
    fn fft_pairs_invert() {
        let data: Vec<f64> = (0..48).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let mut tape = Tape::new();
        let x = tape.constant(t(&[4, 6, 2], &data));
        for axis in 0..3 {
            let n = tape.value(x).shape()[axis];
            let f = tape.rfft_dim(x, axis).unwrap();
            let b = tape.irfft_dim(f, axis, n).unwrap();
            let err = tape.value(b).data().iter().zip(&data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-12, "axis {axis}: {err}");
        }
        let c = tape.constant(t(&[4, 6, 2], &data));
        for axis in 0..2 {
            let f = tape.cfft_dim(c, axis, false).unwrap();
            let b = tape.cfft_dim(f, axis, true).unwrap();
            let err = tape.value(b).data().iter().zip(&data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-12, "axis {axis}: {err}");
        }
    }

    #[test]
    fn truncated_transforms_match_fft_compositions() {
        let data: Vec<f64> = (0..96).map(|i| ((i * 29 % 13) as f64 - 6.0) * 0.2).collect();
        let mut tape = Tape::new();
        let x = tape.constant(t(&[4, 6, 4], &data));
        for (axis, m) in [(0, 2), (1, 3), (1, 4), (2, 3)] {
            let n = tape.value(x).shape()[axis];
            let full = tape.rfft_dim(x, axis).unwrap();
            let sliced = tape.slice_modes(full, axis, m).unwrap();
            let direct = tape.rdft_modes(x, axis, m).unwrap();
            assert_eq!(tape.value(direct).shape(), tape.value(sliced).shape());
            let err = tape.value(direct).data().iter().zip(tape.value(sliced).data()).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            assert!(err < 1e-12, "forward axis {axis}: {err}");

            let padded = tape.pad_modes(sliced, axis, n / 2 + 1).unwrap();
            let back = tape.irfft_dim(padded, axis, n).unwrap();
            let direct_back = tape.irdft_modes(sliced, axis, n).unwrap();
            let err = tape.value(direct_back).data().iter().zip(tape.value(back).data()).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            assert!(err < 1e-12, "inverse axis {axis}: {err}");
        }
        assert!(tape.rdft_modes(x, 0, 4).is_err());
        let f = tape.rdft_modes(x, 2, 3).unwrap();
        assert!(tape.irdft_modes(f, 2, 2).is_err());
    }

    #[test]
    fn rfft_matches_direct_sum() {
        let data = [0.3, -1.2, 2.0, 0.5, -0.7, 1.1];
        let mut tape = Tape::new();
        let x = tape.constant(t(&[6], &data));
        let f = tape.rfft_dim(x, 0).unwrap();
        let out = tape.value(f);
        assert_eq!(out.shape(), &[4, 2]);
        for k in 0..4 {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, v) in data.iter().enumerate() {
                let a = -2.0 * std::f64::consts::PI * (j * k) as f64 / 6.0;
                re += v * a.cos();
                im += v * a.sin();
            }
            assert!((out.data()[2 * k] - re).abs() < 1e-12 && (out.data()[2 * k + 1] - im).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_weights_leave_input() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let w = tape.constant(t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]));
        let y = tape.matmul_pointwise(x, w, None).unwrap();
        assert_eq!(tape.value(y), tape.value(x));
    }

    #[test]
    fn mse_norm_of_equal_inputs_has_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[3], &[1.0, -2.0, 0.5]));
        let l = tape.mse_norm(x, x).unwrap();
        assert_eq!(tape.value(l).item(), 0.0);
        let g = tape.backward(l).unwrap();
        assert!(g.get(x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn errors() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::zeros(&[2, 3]));
        let b = tape.param(Tensor::zeros(&[3, 2]));
        let msg = tape.add(a, b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[3, 2]"), "{msg}");
        assert_eq!(tape.backward(a).unwrap_err(), AutodiffError::NotScalar(vec![2, 3]));
        assert_eq!(tape.mse_norm(a, a).unwrap_err(), AutodiffError::ZeroNorm);
        assert!(tape.rfft_dim(a, 1).is_err());
        assert!(tape.gather_modes(a, 1, &[0, 0]).is_err());
    }

    #[test]
    fn backward_is_linear() {
        let xs = [0.4, -1.3, 0.8, 2.2];
        let grad_of = |a: f64, b: f64| {
            let mut tape = Tape::new();
            let x = tape.param(t(&[4], &xs));
            let sq = tape.mul(x, x).unwrap();
            let f = tape.sum(sq);
            let r = tape.relu(x);
            let g = tape.sum(r);
            let fa = tape.affine_scalar(f, a, 0.0);
            let gb = tape.affine_scalar(g, b, 0.0);
            let total = tape.add(fa, gb).unwrap();
            tape.backward(total).unwrap().take(x).unwrap()
        };
        let (a, b) = (0.7, -2.5);
        let combined = grad_of(a, b);
        let (f, g) = (grad_of(1.0, 0.0), grad_of(0.0, 1.0));
        for i in 0..4 {
            assert!((combined.data()[i] - (a * f.data()[i] + b * g.data()[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut tape = Tape::new();
        let c = tape.constant(Tensor::scalar(2.0));
        let p = tape.param(Tensor::scalar(5.0));
        let y = tape.mul(c, p).unwrap();
        let g = tape.backward(y).unwrap();
        assert!(g.get(c).is_none());
        assert_eq!(g.get(p).unwrap().item(), 2.0);
    }
}
