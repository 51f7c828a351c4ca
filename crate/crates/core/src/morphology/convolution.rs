use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::fft::{fft_friendly, Fft3};
use crate::grid::{GridSpec, ScalarField};
use crate::{Error, Result};

/// Reusable FFT workspace for convolving one stationary field against many
/// kernels (one per tool orientation).
///
/// The stationary spectrum is computed once at construction. Arrays are
/// zero-padded to at least `n_a + n_b − 1` per axis, so the circular FFT
/// product equals the linear convolution with no wrap-around.
pub struct ConvolutionPlan {
    stationary: GridSpec,
    stationary_norm: f64,
    capacity: [usize; 3],
    padded: [usize; 3],
    fft: Fft3,
    spectrum: Vec<Complex64>,
}

impl ConvolutionPlan {
    /// Plan for kernels of at most `max_kernel_dims` voxels per axis.
    pub fn new(stationary: &ScalarField, max_kernel_dims: [usize; 3]) -> Result<Self> {
        let a = stationary.spec().dims();
        if max_kernel_dims.contains(&0) {
            return Err(Error::param("max_kernel_dims", "kernel dims must be >= 1"));
        }
        let mut padded = [1usize; 3];
        for ax in 0..3 {
            let need = a[ax] + max_kernel_dims[ax] - 1;
            padded[ax] = if need == 1 { 1 } else { fft_friendly(need) };
        }
        let fft = Fft3::new(padded);
        let mut spectrum = embed(stationary, padded);
        fft.forward(&mut spectrum);
        Ok(ConvolutionPlan {
            stationary: *stationary.spec(),
            stationary_norm: l2(stationary.values()),
            capacity: max_kernel_dims,
            padded,
            fft,
            spectrum,
        })
    }

    pub fn padded_dims(&self) -> [usize; 3] {
        self.padded
    }

    /// Bytes held by one in-flight convolution (one complex padded array).
    pub fn workspace_bytes(&self) -> usize {
        self.fft.len() * std::mem::size_of::<Complex64>()
    }

    pub fn stationary_spec(&self) -> &GridSpec {
        &self.stationary
    }

    /// Linear convolution of the stationary field with `kernel`, scaled by
    /// the voxel volume so that convolving two indicators gives overlap
    /// volumes.
    ///
    /// Output voxel `m` sits at world position `o_a + o_b + h·m`.
    pub fn convolve(&self, kernel: &ScalarField) -> Result<ScalarField> {
        let b = kernel.spec();
        if !self.stationary.same_spacing(b) {
            return Err(Error::Shape(format!(
                "convolution needs equal spacing, got {:?} and {:?}",
                self.stationary.spacing(),
                b.spacing()
            )));
        }
        let nb = b.dims();
        if (0..3).any(|ax| nb[ax] > self.capacity[ax]) {
            return Err(Error::Shape(format!(
                "kernel dims {nb:?} exceed planned capacity {:?}",
                self.capacity
            )));
        }
        let na = self.stationary.dims();
        let out_dims = [na[0] + nb[0] - 1, na[1] + nb[1] - 1, na[2] + nb[2] - 1];
        let oa = self.stationary.origin();
        let ob = b.origin();
        let planar = self.stationary.is_planar() && b.is_planar();
        let origin = [oa[0] + ob[0], oa[1] + ob[1], if planar { oa[2] } else { oa[2] + ob[2] }];
        let spec = GridSpec::new(out_dims, self.stationary.spacing(), origin)?;

        let mut work = embed(kernel, self.padded);
        self.fft.forward(&mut work);
        work.par_iter_mut()
            .zip(self.spectrum.par_iter())
            .for_each(|(w, s)| *w *= s);
        self.fft.inverse(&mut work);

        let dv = self.stationary.voxel_volume();
        let n = self.fft.len() as f64;
        let scale = dv / n;
        let floor = dv * noise_floor(self.stationary_norm * l2(kernel.values()), self.fft.len());
        let [px, py, _] = self.padded;
        let mut values = vec![0.0; spec.len()];
        values
            .par_chunks_mut(out_dims[0])
            .enumerate()
            .for_each(|(r, row)| {
                let (j, k) = (r % out_dims[1], r / out_dims[1]);
                let base = px * (j + py * k);
                for (i, v) in row.iter_mut().enumerate() {
                    let x = work[base + i].re * scale;
                    *v = if x.abs() < floor { 0.0 } else { x };
                }
            });
        Ok(ScalarField::from_raw(spec, values))
    }
}

/// One-shot linear convolution `dv · (a ∗ b)`.
pub fn convolve(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    ConvolutionPlan::new(a, b.spec().dims())?.convolve(b)
}

/// Magnitude below which an FFT output is indistinguishable from roundoff,
/// relative to one voxel volume. Never smaller than `1e-12`.
fn noise_floor(norm_product: f64, n: usize) -> f64 {
    let log_n = (n.max(2) as f64).log2();
    (16.0 * f64::EPSILON * log_n * norm_product).max(1e-12)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn embed(f: &ScalarField, padded: [usize; 3]) -> Vec<Complex64> {
    let [nx, ny, nz] = f.spec().dims();
    let [px, py, pz] = padded;
    let mut out = vec![Complex64::default(); px * py * pz];
    let vals = f.values();
    out.par_chunks_mut(px).enumerate().for_each(|(r, row)| {
        let (j, k) = (r % py, r / py);
        if j < ny && k < nz {
            let src = &vals[nx * (j + ny * k)..nx * (j + ny * k) + nx];
            for (dst, &s) in row.iter_mut().zip(src) {
                *dst = Complex64::new(s, 0.0);
            }
        }
    });
    out
}
