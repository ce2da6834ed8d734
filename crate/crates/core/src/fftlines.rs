//! Batched 1D complex FFTs over contiguous lines, with per-thread plan caches.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized transform of every length-`n` chunk of `buf`, in place.
/// `inverse` selects the `e^{+i...}` kernel.
pub fn fft_lines(buf: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(buf.len() % n, 0);
    if buf.is_empty() {
        return;
    }
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
}
