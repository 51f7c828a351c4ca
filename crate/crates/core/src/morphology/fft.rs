//! Separable 3D complex FFT over a row-major `[px, py, pz]` array built from
//! 1D `rustfft` transforms. Axes of length 1 are skipped, so planar arrays
//! only pay for two passes.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest `n' >= n` whose prime factors are all in {2, 3, 5, 7}.
pub(crate) fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

pub(crate) struct Fft3 {
    dims: [usize; 3],
    forward: [Option<Arc<dyn Fft<f64>>>; 3],
    inverse: [Option<Arc<dyn Fft<f64>>>; 3],
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let mut forward: [Option<Arc<dyn Fft<f64>>>; 3] = [None, None, None];
        let mut inverse: [Option<Arc<dyn Fft<f64>>>; 3] = [None, None, None];
        for a in 0..3 {
            if dims[a] > 1 {
                forward[a] = Some(planner.plan_fft_forward(dims[a]));
                inverse[a] = Some(planner.plan_fft_inverse(dims[a]));
            }
        }
        Fft3 {
            dims,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse; callers divide by [`Fft3::len`].
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Option<Arc<dyn Fft<f64>>>; 3]) {
        assert_eq!(data.len(), self.len());
        let [px, py, pz] = self.dims;
        if let Some(fft) = &plans[0] {
            transform_rows(data, px, fft);
        }
        if let Some(fft) = &plans[1] {
            // gather y-lines into rows ordered (y, x, z)
            let mut buf = vec![Complex64::default(); data.len()];
            buf.par_chunks_mut(py).enumerate().for_each(|(r, row)| {
                let (x, z) = (r % px, r / px);
                for (y, v) in row.iter_mut().enumerate() {
                    *v = data[x + px * (y + py * z)];
                }
            });
            transform_rows(&mut buf, py, fft);
            data.par_chunks_mut(px).enumerate().for_each(|(r, row)| {
                let (y, z) = (r % py, r / py);
                for (x, v) in row.iter_mut().enumerate() {
                    *v = buf[y + py * (x + px * z)];
                }
            });
        }
        if let Some(fft) = &plans[2] {
            // rows ordered (z, x, y)
            let mut buf = vec![Complex64::default(); data.len()];
            buf.par_chunks_mut(pz).enumerate().for_each(|(r, row)| {
                let (x, y) = (r % px, r / px);
                for (z, v) in row.iter_mut().enumerate() {
                    *v = data[x + px * (y + py * z)];
                }
            });
            transform_rows(&mut buf, pz, fft);
            data.par_chunks_mut(px).enumerate().for_each(|(r, row)| {
                let (y, z) = (r % py, r / py);
                for (x, v) in row.iter_mut().enumerate() {
                    *v = buf[z + pz * (x + px * y)];
                }
            });
        }
    }
}

fn transform_rows(data: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    // batch several rows per task to amortize scratch allocation
    let rows_per_task = (4096 / len).max(1);
    data.par_chunks_mut(len * rows_per_task).for_each_init(
        || vec![Complex64::default(); fft.get_inplace_scratch_len()],
        |scratch, chunk| fft.process_with_scratch(chunk, scratch),
    );
}
