//! Real DFTs truncated to the lowest `m` frequencies along one axis, computed
//! as dense products with small trigonometric matrices. With few retained
//! modes this is cheaper than a full FFT followed by slicing or padding.

use std::f64::consts::PI;

use super::lines::Lines;
use super::tape::gemm;

fn angle(j: usize, k: usize, n: usize) -> f64 {
    2.0 * PI * ((j * k) % n) as f64 / n as f64
}

/// `[2m, n]` analysis matrix: rows `2k`, `2k+1` are the real and imaginary
/// parts of `exp(-2 pi i j k / n)`.
fn analysis(n: usize, m: usize) -> Vec<f64> {
    let mut e = vec![0.0; 2 * m * n];
    for k in 0..m {
        for j in 0..n {
            let a = angle(j, k, n);
            e[2 * k * n + j] = a.cos();
            e[(2 * k + 1) * n + j] = -a.sin();
        }
    }
    e
}

/// `[n, 2m]` synthesis matrix of the inverse real transform from the lowest
/// `m` frequencies, ignoring the imaginary parts of the zero and Nyquist modes.
fn synthesis(n: usize, m: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * 2 * m];
    for j in 0..n {
        for k in 0..m {
            let c = if k == 0 || 2 * k == n { 1.0 } else { 2.0 } / n as f64;
            let a = angle(j, k, n);
            g[j * 2 * m + 2 * k] = c * a.cos();
            g[j * 2 * m + 2 * k + 1] = if 2 * k == n { 0.0 } else { -c * a.sin() };
        }
    }
    g
}

/// `[m, inner, 2]` interleaved block to `[2m, inner]` planar rows.
fn planar(src: &[f64], m: usize, inner: usize, dst: &mut [f64]) {
    for k in 0..m {
        for i in 0..inner {
            let s = 2 * (k * inner + i);
            dst[2 * k * inner + i] = src[s];
            dst[(2 * k + 1) * inner + i] = src[s + 1];
        }
    }
}

fn interleaved(src: &[f64], m: usize, inner: usize, dst: &mut [f64]) {
    for k in 0..m {
        for i in 0..inner {
            let d = 2 * (k * inner + i);
            dst[d] = src[2 * k * inner + i];
            dst[d + 1] = src[(2 * k + 1) * inner + i];
        }
    }
}

/// `[outer, n, inner]` real to `[outer, m, inner, 2]` complex.
pub(super) fn forward(x: &[f64], l: Lines, m: usize) -> Vec<f64> {
    let e = analysis(l.n, m);
    let mut out = vec![0.0; 2 * l.outer * m * l.inner];
    if l.inner == 1 {
        gemm(1.0, l.outer, l.n, 2 * m, x, false, &e, true, 0.0, &mut out);
        return out;
    }
    let mut t = vec![0.0; 2 * m * l.inner];
    for (xo, oo) in x.chunks_exact(l.n * l.inner).zip(out.chunks_exact_mut(2 * m * l.inner)) {
        gemm(1.0, 2 * m, l.n, l.inner, &e, false, xo, false, 0.0, &mut t);
        interleaved(&t, m, l.inner, oo);
    }
    out
}

/// Adjoint of [`forward`].
pub(super) fn forward_adjoint(g: &[f64], l: Lines, m: usize) -> Vec<f64> {
    let e = analysis(l.n, m);
    let mut out = vec![0.0; l.outer * l.n * l.inner];
    if l.inner == 1 {
        gemm(1.0, l.outer, 2 * m, l.n, g, false, &e, false, 0.0, &mut out);
        return out;
    }
    let mut t = vec![0.0; 2 * m * l.inner];
    for (go, oo) in g.chunks_exact(2 * m * l.inner).zip(out.chunks_exact_mut(l.n * l.inner)) {
        planar(go, m, l.inner, &mut t);
        gemm(1.0, l.n, 2 * m, l.inner, &e, true, &t, false, 0.0, oo);
    }
    out
}

/// `[outer, m, inner, 2]` complex to `[outer, n, inner]` real, where `l.n` is
/// the output length.
pub(super) fn inverse(x: &[f64], l: Lines, m: usize) -> Vec<f64> {
    let s = synthesis(l.n, m);
    let mut out = vec![0.0; l.outer * l.n * l.inner];
    if l.inner == 1 {
        gemm(1.0, l.outer, 2 * m, l.n, x, false, &s, true, 0.0, &mut out);
        return out;
    }
    let mut t = vec![0.0; 2 * m * l.inner];
    for (xo, oo) in x.chunks_exact(2 * m * l.inner).zip(out.chunks_exact_mut(l.n * l.inner)) {
        planar(xo, m, l.inner, &mut t);
        gemm(1.0, l.n, 2 * m, l.inner, &s, false, &t, false, 0.0, oo);
    }
    out
}

/// Adjoint of [`inverse`].
pub(super) fn inverse_adjoint(g: &[f64], l: Lines, m: usize) -> Vec<f64> {
    let s = synthesis(l.n, m);
    let mut out = vec![0.0; 2 * l.outer * m * l.inner];
    if l.inner == 1 {
        gemm(1.0, l.outer, l.n, 2 * m, g, false, &s, false, 0.0, &mut out);
        return out;
    }
    let mut t = vec![0.0; 2 * m * l.inner];
    for (go, oo) in g.chunks_exact(l.n * l.inner).zip(out.chunks_exact_mut(2 * m * l.inner)) {
        gemm(1.0, 2 * m, l.n, l.inner, &s, true, go, false, 0.0, &mut t);
        interleaved(&t, m, l.inner, oo);
    }
    out
}
