//! In-place 3-D FFT on cubic arrays, row-major with the last axis fastest.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

const BLOCK: usize = 64;

pub struct Fft3 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 { m, forward: planner.plan_fft_forward(m), inverse: planner.plan_fft_inverse(m) }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform including the `1/m³` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / (self.m as f64).powi(3);
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        assert_eq!(data.len(), m * m * m);
        // last axis: contiguous lines
        data.par_chunks_mut(m).for_each_init(
            || vec![Complex64::default(); plan.get_inplace_scratch_len()],
            |scratch, line| plan.process_with_scratch(line, scratch),
        );
        // middle axis: within each m×m slab
        data.par_chunks_mut(m * m).for_each_init(
            || (vec![Complex64::default(); m], vec![Complex64::default(); plan.get_inplace_scratch_len()]),
            |(line, scratch), slab| {
                for k in 0..m {
                    for j in 0..m {
                        line[j] = slab[j * m + k];
                    }
                    plan.process_with_scratch(line, scratch);
                    for j in 0..m {
                        slab[j * m + k] = line[j];
                    }
                }
            },
        );
        // first axis: gather strided columns in blocks of the fast index
        let stride = m * m;
        let block = m.min(BLOCK);
        let mut buf = vec![Complex64::default(); block * m];
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for start in (0..stride).step_by(block) {
            let width = block.min(stride - start);
            for c in 0..width {
                for i in 0..m {
                    buf[c * m + i] = data[i * stride + start + c];
                }
            }
            for line in buf[..width * m].chunks_mut(m) {
                plan.process_with_scratch(line, &mut scratch);
            }
            for c in 0..width {
                for i in 0..m {
                    data[i * stride + start + c] = buf[c * m + i];
                }
            }
        }
    }
}

/// Signed frequency index for position `k` of an `m`-point transform.
pub fn signed_index(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}
