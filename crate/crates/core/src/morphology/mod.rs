//! Rigid transforms of voxel fields and FFT convolution.
//!
//! Together these realize the configuration-space operations used by the
//! accessibility analysis: the translational obstacle slice of an oriented
//! tool is the positive support of `ρ_O ∗ reflect(R·T)`, and the region the
//! cutter sweeps over a set of free translations is the positive support of
//! `1_free ∗ R·K`.
//!
//! All fields carry world-space origins, so a convolution result is itself a
//! field over translations `t` in world coordinates.

mod convolution;
mod fft;
mod orientation;

pub use convolution::{convolve, ConvolutionPlan};
pub use orientation::{Orientation, Rotation};

use rayon::prelude::*;

use crate::grid::{indicator, GridSpec, ScalarField, LATTICE_EPS};
use crate::{Error, Result};

/// Rotate `f` about the world origin by `r`, resampling onto a grid with the
/// same spacing whose lattice is anchored at `f`'s lattice.
///
/// Each output voxel center is mapped back through `r⁻¹` and `f` is sampled
/// there by trilinear (bilinear on planar grids) interpolation. The result is
/// cropped to its nonzero support.
pub fn rotate_resample(f: &ScalarField, r: &Orientation) -> Result<ScalarField> {
    let spec = f.spec();
    if !spec.is_isotropic() {
        return Err(Error::Unsupported(format!(
            "rotation needs isotropic spacing, got {:?}",
            spec.spacing()
        )));
    }
    if spec.is_planar() && !r.is_planar() {
        return Err(Error::Unsupported(
            "planar fields can only be rotated by planar orientations".into(),
        ));
    }
    let Some((lo, hi)) = f.support_bounds() else {
        return Ok(f.clone());
    };
    let h = spec.spacing()[0];
    let origin = spec.origin();
    let planar = spec.is_planar();

    // rotate the corners of the support box (voxel extents, not centers)
    let lo_w = spec.center(lo);
    let hi_w = spec.center(hi);
    let mut bmin = [f64::INFINITY; 3];
    let mut bmax = [f64::NEG_INFINITY; 3];
    for c in 0..8 {
        let p = [
            if c & 1 == 0 { lo_w[0] - 0.5 * h } else { hi_w[0] + 0.5 * h },
            if c & 2 == 0 { lo_w[1] - 0.5 * h } else { hi_w[1] + 0.5 * h },
            if c & 4 == 0 { lo_w[2] - 0.5 * h } else { hi_w[2] + 0.5 * h },
        ];
        let q = r.apply(p);
        for a in 0..3 {
            bmin[a] = bmin[a].min(q[a]);
            bmax[a] = bmax[a].max(q[a]);
        }
    }
    let mut first = [0i64; 3];
    let mut dims = [1usize; 3];
    for a in 0..3 {
        if planar && a == 2 {
            continue;
        }
        let s = (bmin[a] - origin[a]) / h;
        let e = (bmax[a] - origin[a]) / h;
        first[a] = s.floor() as i64;
        dims[a] = (e.ceil() as i64 - first[a] + 1) as usize;
    }
    let out_origin = [
        origin[0] + h * first[0] as f64,
        origin[1] + h * first[1] as f64,
        if planar { origin[2] } else { origin[2] + h * first[2] as f64 },
    ];
    let out_spec = GridSpec::new(dims, spec.spacing(), out_origin)?;
    let mut values = vec![0.0; out_spec.len()];
    values
        .par_chunks_mut(dims[0])
        .enumerate()
        .for_each(|(row, chunk)| {
            let (j, k) = (row % dims[1], row / dims[1]);
            for (i, v) in chunk.iter_mut().enumerate() {
                let p = out_spec.center([i, j, k]);
                let q = r.apply_inverse(p);
                let mut s = spec.to_index_space(q);
                for c in s.iter_mut() {
                    let rc = c.round();
                    if (*c - rc).abs() < LATTICE_EPS {
                        *c = rc;
                    }
                }
                if planar {
                    s[2] = 0.0;
                }
                *v = f.sample_index(s);
            }
        });
    Ok(ScalarField::from_raw(out_spec, values).crop_to_support())
}

/// [`rotate_resample`] followed by re-binarization at 0.5, so the result is
/// again an indicator.
pub fn rotate_indicator(f: &ScalarField, r: &Orientation) -> Result<ScalarField> {
    let rotated = rotate_resample(f, r)?;
    let values = rotated.values().iter().map(|&v| indicator(v >= 0.5)).collect();
    Ok(ScalarField::from_raw(*rotated.spec(), values).crop_to_support())
}

/// Point reflection through the world origin: `out(x) = f(−x)`.
pub fn reflect(f: &ScalarField) -> ScalarField {
    let spec = f.spec();
    let d = spec.dims();
    let s = spec.spacing();
    let o = spec.origin();
    let mut origin = [0.0; 3];
    for a in 0..3 {
        origin[a] = -(o[a] + s[a] * (d[a] - 1) as f64);
    }
    if spec.is_planar() {
        origin[2] = o[2];
    }
    let out = GridSpec::new(d, s, origin).expect("reflected grid is valid");
    let mut values = f.values().to_vec();
    values.reverse();
    ScalarField::from_raw(out, values)
}

/// Convolution kernel whose product with an obstacle field gives the overlap
/// volume of the oriented tool at each translation: `reflect(R·T)`.
pub fn oriented_kernel(tool: &ScalarField, r: &Orientation) -> Result<ScalarField> {
    Ok(reflect(&rotate_indicator(tool, r)?))
}

/// Collision measure of the oriented tool over all lattice translations,
/// `g(t) = (ρ_O ∗ reflect(R·T))(t)`.
///
/// `g(t)` is the overlap volume between the obstacle density and the tool
/// placed at `t`; its strictly positive support is the translational
/// C-obstacle slice at orientation `r`.
pub fn cobstacle_slice(rho_o: &ScalarField, tool: &ScalarField, r: &Orientation) -> Result<ScalarField> {
    convolve(rho_o, &oriented_kernel(tool, r)?)
}

/// Binary field of translations whose collision measure does not exceed
/// `allowance`, on the window of `g`.
pub fn free_translations(g: &ScalarField, allowance: f64) -> Result<ScalarField> {
    if !(allowance >= 0.0 && allowance.is_finite()) {
        return Err(Error::param("allowance", format!("must be finite and >= 0, got {allowance}")));
    }
    let values = g.values().iter().map(|&v| indicator(v <= allowance)).collect();
    Ok(ScalarField::from_raw(*g.spec(), values))
}

/// Region visited by the oriented cutter over the free translations
/// `d_free`, restricted to the voxels of `domain`.
///
/// The result lives on `domain`'s grid. `d_free` must share `domain`'s
/// lattice (same spacing, integer voxel offset), which holds whenever it was
/// derived from a convolution of a field on that grid.
pub fn sweep_accessible(
    d_free: &ScalarField,
    cutter: &ScalarField,
    r: &Orientation,
    domain: &ScalarField,
) -> Result<ScalarField> {
    let rk = rotate_indicator(cutter, r)?;
    let swept = convolve(d_free, &rk)?;
    let dv = swept.spec().voxel_volume();
    let covered = swept.map(|v| indicator(v > 0.5 * dv))?;
    resample_onto(&covered, domain.spec())?.and(domain)
}

/// Copy the voxels of `f` that fall on `target`'s lattice into a field on
/// `target`; voxels outside `f`'s window read as zero.
pub fn resample_onto(f: &ScalarField, target: &GridSpec) -> Result<ScalarField> {
    if !f.spec().same_spacing(target) {
        return Err(Error::Shape("resample_onto needs equal spacing".into()));
    }
    let off = f
        .spec()
        .lattice_offset(target)
        .ok_or_else(|| Error::Shape("fields are not on a common lattice".into()))?;
    let fd = f.spec().dims();
    let td = target.dims();
    let mut values = vec![0.0; target.len()];
    values.par_chunks_mut(td[0]).enumerate().for_each(|(row, chunk)| {
        let (j, k) = (row % td[1], row / td[1]);
        let fj = j as i64 + off[1];
        let fk = k as i64 + off[2];
        if fj < 0 || fk < 0 || fj >= fd[1] as i64 || fk >= fd[2] as i64 {
            return;
        }
        for (i, v) in chunk.iter_mut().enumerate() {
            let fi = i as i64 + off[0];
            if fi >= 0 && fi < fd[0] as i64 {
                *v = f.values()[f.spec().index(fi as usize, fj as usize, fk as usize)];
            }
        }
    });
    Ok(ScalarField::from_raw(*target, values))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn rect(nx: usize, ny: usize, lo: [usize; 2], hi: [usize; 2]) -> ScalarField {
        let spec = GridSpec::new([nx, ny, 1], [1.0; 3], [0.0; 3]).unwrap();
        ScalarField::from_fn(spec, |[i, j, _]| {
            indicator(i >= lo[0] && i <= hi[0] && j >= lo[1] && j <= hi[1])
        })
        .unwrap()
    }

    #[test]
    fn identity_rotation_keeps_support() {
        let f = rect(6, 5, [1, 1], [3, 2]);
        let r = rotate_resample(&f, &Orientation::identity(0, true)).unwrap();
        assert_eq!(r, f.crop_to_support());
    }

    #[test]
    fn quarter_turn_transposes_a_rectangle() {
        let f = rect(6, 6, [0, 0], [3, 1]);
        let r = rotate_indicator(&f, &Orientation::planar(0, 0.5 * PI)).unwrap();
        assert_eq!(r.spec().dims(), [2, 4, 1]);
        assert_eq!(r.count_nonzero(), 8);
        assert_eq!(r.spec().origin(), [-1.0, 0.0, 0.0]);
    }

    #[test]
    fn rotated_disc_keeps_its_area() {
        let n = 64;
        let spec = GridSpec::new([n, n, 1], [1.0; 3], [-(n as f64) / 2.0 + 0.5, -(n as f64) / 2.0 + 0.5, 0.0]).unwrap();
        let disc = ScalarField::from_fn(spec, |ijk| {
            let p = spec.center(ijk);
            indicator(p[0] * p[0] + p[1] * p[1] <= 25.0 * 25.0)
        })
        .unwrap();
        let r = rotate_resample(&disc, &Orientation::planar(0, PI / 4.0)).unwrap();
        let exact = PI * 625.0;
        assert!((r.volume_integral() - exact).abs() / exact < 0.02);
    }

    #[test]
    fn anisotropic_rotation_is_unsupported() {
        let spec = GridSpec::new([2, 2, 1], [1.0, 2.0, 1.0], [0.0; 3]).unwrap();
        let f = ScalarField::constant(spec, 1.0);
        assert!(matches!(
            rotate_resample(&f, &Orientation::planar(0, 0.3)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn reflect_moves_a_voxel_through_the_origin() {
        let spec = GridSpec::new([3, 1, 1], [1.0; 3], [2.0, 0.0, 0.0]).unwrap();
        let f = ScalarField::new(spec, vec![0.0, 0.0, 1.0]).unwrap();
        let g = reflect(&f);
        assert_eq!(g.spec().origin()[0], -4.0);
        assert_eq!(g.values(), &[1.0, 0.0, 0.0]);
        let back = reflect(&g);
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn empty_obstacle_gives_zero_collision() {
        let o = ScalarField::zeros(GridSpec::new([8, 8, 1], [1.0; 3], [0.0; 3]).unwrap());
        let t = rect(3, 3, [0, 0], [2, 2]);
        let g = cobstacle_slice(&o, &t, &Orientation::identity(0, true)).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_square_overlap_peaks_at_one_voxel() {
        let o = rect(1, 1, [0, 0], [0, 0]);
        let g = cobstacle_slice(&o, &o, &Orientation::identity(0, true)).unwrap();
        assert_eq!(g.values(), &[1.0]);
        assert_eq!(g.spec().origin(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn point_cutter_sweeps_exactly_the_free_set() {
        let domain = rect(5, 5, [0, 0], [4, 4]);
        let free = rect(5, 5, [1, 0], [3, 2]);
        let cutter = rect(1, 1, [0, 0], [0, 0]);
        let a = sweep_accessible(&free, &cutter, &Orientation::identity(0, true), &domain).unwrap();
        assert_eq!(a, free);
    }

    #[test]
    fn nothing_free_sweeps_nothing() {
        let domain = rect(5, 5, [0, 0], [4, 4]);
        let free = ScalarField::zeros(*domain.spec());
        let cutter = rect(2, 2, [0, 0], [1, 1]);
        let a = sweep_accessible(&free, &cutter, &Orientation::identity(0, true), &domain).unwrap();
        assert_eq!(a.count_nonzero(), 0);
    }
}
