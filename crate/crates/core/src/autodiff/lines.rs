//! Transforms along one axis of a row-major array viewed as `[outer, n, inner]`.
//! Complex arrays are interleaved, so their `inner` counts complex values.

use num_complex::Complex64;

use crate::fftlines::fft_lines;

#[derive(Debug, Clone, Copy)]
pub(super) struct Lines {
    pub outer: usize,
    pub n: usize,
    pub inner: usize,
}

impl Lines {
    pub fn of(shape: &[usize], axis: usize) -> Self {
        Self { outer: shape[..axis].iter().product(), n: shape[axis], inner: shape[axis + 1..].iter().product() }
    }

    /// Same view for a complex array whose shape ends in the interleave axis.
    pub fn of_complex(shape: &[usize], axis: usize) -> Self {
        Self::of(&shape[..shape.len() - 1], axis)
    }

    fn count(&self) -> usize {
        self.outer * self.inner
    }

    /// Copies `len` entries along the axis of every line into a contiguous
    /// buffer of lines of length `width`, zero-filling the tail.
    fn load(&self, width: usize, len: usize, get: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.count() * width];
        for o in 0..self.outer {
            for i in 0..self.inner {
                let line = &mut buf[(o * self.inner + i) * width..][..width];
                for (k, slot) in line.iter_mut().take(len).enumerate() {
                    *slot = get((o * len + k) * self.inner + i);
                }
            }
        }
        buf
    }

    fn store(&self, buf: &[Complex64], width: usize, len: usize, mut put: impl FnMut(usize, Complex64)) {
        for o in 0..self.outer {
            for i in 0..self.inner {
                let line = &buf[(o * self.inner + i) * width..][..width];
                for (k, &v) in line.iter().take(len).enumerate() {
                    put((o * len + k) * self.inner + i, v);
                }
            }
        }
    }
}

fn cplx(data: &[f64], idx: usize) -> Complex64 {
    Complex64::new(data[2 * idx], data[2 * idx + 1])
}

fn set_cplx(out: &mut [f64], idx: usize, v: Complex64) {
    out[2 * idx] = v.re;
    out[2 * idx + 1] = v.im;
}

/// Real-input FFT keeping frequencies `0..=n/2`.
pub(super) fn rfft(x: &[f64], l: Lines) -> Vec<f64> {
    let h = l.n / 2 + 1;
    let mut buf = l.load(l.n, l.n, |i| Complex64::new(x[i], 0.0));
    fft_lines(&mut buf, l.n, false);
    let mut out = vec![0.0; 2 * l.count() * h];
    l.store(&buf, l.n, h, |idx, v| set_cplx(&mut out, idx, v));
    out
}

/// Adjoint of [`rfft`]: real part of the unnormalized inverse of the
/// zero-extended half spectrum.
pub(super) fn rfft_adjoint(g: &[f64], l: Lines) -> Vec<f64> {
    let h = l.n / 2 + 1;
    let mut buf = l.load(l.n, h, |i| cplx(g, i));
    fft_lines(&mut buf, l.n, true);
    let mut out = vec![0.0; l.count() * l.n];
    l.store(&buf, l.n, l.n, |idx, v| out[idx] = v.re);
    out
}

/// Inverse of [`rfft`] for an axis of even length `l.n`; the imaginary parts of the
/// zero and Nyquist frequencies are ignored.
pub(super) fn irfft(x: &[f64], l: Lines) -> Vec<f64> {
    let (n, h) = (l.n, l.n / 2 + 1);
    let mut buf = l.load(n, h, |i| cplx(x, i));
    for line in buf.chunks_exact_mut(n) {
        line[0].im = 0.0;
        line[n / 2].im = 0.0;
        for k in 1..n / 2 {
            line[n - k] = line[k].conj();
        }
    }
    fft_lines(&mut buf, n, true);
    let scale = 1.0 / n as f64;
    let mut out = vec![0.0; l.count() * n];
    l.store(&buf, n, n, |idx, v| out[idx] = v.re * scale);
    out
}

/// Adjoint of [`irfft`]: `(c_k / n) rfft(g)` with `c_k = 1` at the zero and
/// Nyquist frequencies (whose imaginary parts get no gradient) and 2 elsewhere.
pub(super) fn irfft_adjoint(g: &[f64], l: Lines) -> Vec<f64> {
    let (n, h) = (l.n, l.n / 2 + 1);
    let mut buf = l.load(n, n, |i| Complex64::new(g[i], 0.0));
    fft_lines(&mut buf, n, false);
    let scale = 1.0 / n as f64;
    for line in buf.chunks_exact_mut(n) {
        line[0] = Complex64::new(line[0].re * scale, 0.0);
        line[n / 2] = Complex64::new(line[n / 2].re * scale, 0.0);
        for v in &mut line[1..n / 2] {
            *v *= 2.0 * scale;
        }
    }
    let mut out = vec![0.0; 2 * l.count() * h];
    l.store(&buf, l.n, h, |idx, v| set_cplx(&mut out, idx, v));
    out
}

/// Complex FFT along the axis, scaled by `scale` afterwards.
pub(super) fn cfft(x: &[f64], l: Lines, inverse: bool, scale: f64) -> Vec<f64> {
    let mut buf = l.load(l.n, l.n, |i| cplx(x, i));
    fft_lines(&mut buf, l.n, inverse);
    let mut out = vec![0.0; 2 * l.count() * l.n];
    l.store(&buf, l.n, l.n, |idx, v| set_cplx(&mut out, idx, v * scale));
    out
}
