//! Three-dimensional FFT assembled from 1D rustfft plans.
//!
//! Data layout is `ix + n * (iy + n * iz)` (x fastest). Transforms are
//! unnormalized; the caller owns the scaling convention.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &*self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &*self.inverse);
    }

    fn apply(&self, data: &mut [Complex64], plan: &dyn Fft<f64>) {
        let n = self.n;
        let n2 = n * n;
        assert_eq!(data.len(), n2 * n, "buffer length does not match grid");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];

        // x: contiguous lines
        plan.process_with_scratch(data, &mut scratch);

        // y: transpose each z-plane, transform rows, transpose back
        let mut plane = vec![Complex64::default(); n2];
        for iz in 0..n {
            let block = &mut data[iz * n2..(iz + 1) * n2];
            for iy in 0..n {
                for ix in 0..n {
                    plane[ix * n + iy] = block[iy * n + ix];
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for iy in 0..n {
                for ix in 0..n {
                    block[iy * n + ix] = plane[ix * n + iy];
                }
            }
        }

        // z: gather (ix, iz) slabs for fixed iy
        for iy in 0..n {
            for iz in 0..n {
                let row = &data[iy * n + iz * n2..iy * n + iz * n2 + n];
                for (ix, v) in row.iter().enumerate() {
                    plane[ix * n + iz] = *v;
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for iz in 0..n {
                let row = &mut data[iy * n + iz * n2..iy * n + iz * n2 + n];
                for (ix, v) in row.iter_mut().enumerate() {
                    *v = plane[ix * n + iz];
                }
            }
        }
    }
}
