//! Two-dimensional complex FFT built from rustfft row transforms.
//!
//! Conventions: the forward transform is the plain unnormalized DFT sum, so a
//! constant field `c` transforms to a single zero-mode coefficient `c * n^2`;
//! the inverse carries the `1/n^2` factor. A full 2-D pass is rows, blocked
//! transpose, rows, transpose back, which keeps every 1-D transform on
//! contiguous memory.
//!
//! Transforms are deterministic: plans are fixed at construction and the
//! optional worker threads split rows into disjoint chunks, so no reduction
//! order ever changes. The thread count is process-global (see
//! [`set_threads`]); the CLI wires it to an environment variable.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

static THREADS: AtomicUsize = AtomicUsize::new(1);

/// Set the process-global number of FFT worker threads (clamped to >= 1).
pub fn set_threads(n: usize) {
    THREADS.store(n.max(1), Ordering::Relaxed);
}

/// Current FFT worker thread count.
pub fn threads() -> usize {
    THREADS.load(Ordering::Relaxed).max(1)
}

/// Planned 2-D transform for one grid size.
pub struct Fft2d {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.pass(data, true);
        transpose(data);
        self.pass(data, true);
        transpose(data);
    }

    /// In-place inverse transform including the `1/n^2` normalization.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.pass(data, false);
        transpose(data);
        self.pass(data, false);
        transpose(data);
        let scale = 1.0 / (self.n as f64 * self.n as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Run the 1-D plan over every row, splitting rows across worker threads.
    fn pass(&self, data: &mut Array2<Complex64>, forward: bool) {
        let n = self.n;
        assert_eq!(data.dim(), (n, n), "field size does not match plan");
        let plan = if forward { &self.fwd } else { &self.inv };
        let slice = data.as_slice_mut().expect("fields are standard layout");
        let nthreads = threads().min(n);
        if nthreads <= 1 {
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            for row in slice.chunks_exact_mut(n) {
                plan.process_with_scratch(row, &mut scratch);
            }
            return;
        }
        let rows_per = n.div_ceil(nthreads);
        std::thread::scope(|s| {
            for chunk in slice.chunks_mut(rows_per * n) {
                let plan = Arc::clone(plan);
                s.spawn(move || {
                    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
                    for row in chunk.chunks_exact_mut(n) {
                        plan.process_with_scratch(row, &mut scratch);
                    }
                });
            }
        });
    }
}

/// Blocked in-place transpose of a square matrix.
fn transpose(data: &mut Array2<Complex64>) {
    const B: usize = 32;
    let n = data.nrows();
    let s = data.as_slice_mut().expect("fields are standard layout");
    let mut bi = 0;
    while bi < n {
        let mut bj = bi;
        while bj < n {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    s.swap(i * n + j, j * n + i);
                }
            }
            bj += B;
        }
        bi += B;
    }
}
