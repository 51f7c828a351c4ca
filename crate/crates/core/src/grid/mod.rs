//! Uniform voxel grids and the scalar fields that live on them.
//!
//! Every field stores one `f64` per voxel in row-major order with `x`
//! fastest. [`GridSpec::index`] is the only place that layout is spelled out;
//! everything else goes through it.

pub mod io;
pub mod vtk;

use crate::{Error, Result};

/// Relative tolerance used when comparing spacings and lattice alignment.
pub(crate) const LATTICE_EPS: f64 = 1e-9;

/// Uniform Cartesian grid: voxel counts, voxel edge lengths and the world
/// position of the center of voxel `(0, 0, 0)`.
///
/// A grid with `nz == 1` is a planar (2D) grid. Its `z` spacing acts as the
/// out-of-plane thickness, so [`GridSpec::voxel_volume`] is the cell area
/// times thickness (unit thickness by default).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::param("dims", format!("all dims must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::param(
                "spacing",
                format!("all spacing components must be finite and > 0, got {spacing:?}"),
            ));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::param("origin", format!("origin must be finite, got {origin:?}")));
        }
        Ok(GridSpec {
            dims,
            spacing,
            origin,
        })
    }

    /// Planar grid of `nx × ny` square cells of size `h`, unit thickness,
    /// covering `[0, nx·h] × [0, ny·h]`.
    pub fn planar(nx: usize, ny: usize, h: f64) -> Result<Self> {
        GridSpec::new([nx, ny, 1], [h, h, 1.0], [0.5 * h, 0.5 * h, 0.0])
    }

    /// Cubic-cell grid covering `[0, nx·h] × [0, ny·h] × [0, nz·h]`.
    pub fn cubic(dims: [usize; 3], h: f64) -> Result<Self> {
        GridSpec::new(dims, [h; 3], [0.5 * h; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Number of voxels, `n_G`.
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_planar(&self) -> bool {
        self.dims[2] == 1
    }

    /// Voxel volume `dv = sx·sy·sz`.
    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Whether the in-space spacing is isotropic (`x, y` for planar grids).
    pub fn is_isotropic(&self) -> bool {
        let s = self.spacing;
        let close = |a: f64, b: f64| (a - b).abs() <= LATTICE_EPS * a.abs().max(b.abs());
        if self.is_planar() {
            close(s[0], s[1])
        } else {
            close(s[0], s[1]) && close(s[0], s[2])
        }
    }

    /// Spacings agree on every axis that takes part in convolution.
    pub fn same_spacing(&self, other: &GridSpec) -> bool {
        let axes = if self.is_planar() && other.is_planar() { 2 } else { 3 };
        (0..axes).all(|a| {
            let (x, y) = (self.spacing[a], other.spacing[a]);
            (x - y).abs() <= LATTICE_EPS * x.max(y)
        }) && (axes == 3 || self.spacing[2] == other.spacing[2])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// World coordinates of the center of voxel `(i, j, k)`.
    #[inline]
    pub fn center(&self, ijk: [usize; 3]) -> [f64; 3] {
        [
            self.origin[0] + self.spacing[0] * ijk[0] as f64,
            self.origin[1] + self.spacing[1] * ijk[1] as f64,
            self.origin[2] + self.spacing[2] * ijk[2] as f64,
        ]
    }

    /// Fractional voxel index of a world point.
    #[inline]
    pub fn to_index_space(&self, p: [f64; 3]) -> [f64; 3] {
        [
            (p[0] - self.origin[0]) / self.spacing[0],
            (p[1] - self.origin[1]) / self.spacing[1],
            (p[2] - self.origin[2]) / self.spacing[2],
        ]
    }

    /// Same dims, spacing and origin, bit for bit.
    pub fn matches(&self, other: &GridSpec) -> bool {
        self == other
    }

    pub(crate) fn ensure_matches(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!("{what}: grid {self:?} vs {other:?}")))
        }
    }

    /// Integer offset (in voxels) between the lattices of two grids with the
    /// same spacing, or `None` if their voxel centers are not co-registered.
    pub fn lattice_offset(&self, other: &GridSpec) -> Option<[i64; 3]> {
        let mut off = [0i64; 3];
        for a in 0..3 {
            if self.dims[a] == 1 && other.dims[a] == 1 && a == 2 {
                // planar grids share the single z layer regardless of origin
                off[a] = 0;
                continue;
            }
            let d = (other.origin[a] - self.origin[a]) / self.spacing[a];
            let r = d.round();
            if (d - r).abs() > 1e-6 {
                return None;
            }
            off[a] = r as i64;
        }
        Some(off)
    }
}

/// Dense real-valued field on a [`GridSpec`].
///
/// Binary indicator fields are the special case whose values are all 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Shape(format!(
                "field has {} values but grid {:?} needs {}",
                values.len(),
                spec.dims(),
                spec.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!("non-finite value at voxel {pos}")));
        }
        Ok(ScalarField { spec, values })
    }

    /// Construct without validation; callers guarantee length and finiteness.
    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        ScalarField { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        ScalarField::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        assert!(value.is_finite());
        ScalarField {
            spec,
            values: vec![value; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut([usize; 3]) -> f64) -> Result<Self> {
        let values = (0..spec.len()).map(|idx| f(spec.ijk(idx))).collect();
        ScalarField::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, ijk: [usize; 3]) -> f64 {
        self.values[self.spec.index(ijk[0], ijk[1], ijk[2])]
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        ScalarField::new(self.spec, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        ScalarField::new(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.spec.ensure_matches(&other.spec, "zip_with")?;
        ScalarField::new(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `dv · Σ values`.
    pub fn volume_integral(&self) -> f64 {
        self.spec.voxel_volume() * self.sum()
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    /// Indices of voxels with a nonzero value.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
    }

    /// Inclusive voxel-index bounds of the nonzero support.
    pub fn support_bounds(&self) -> Option<([usize; 3], [usize; 3])> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for idx in self.support() {
            let c = self.spec.ijk(idx);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
            any = true;
        }
        any.then_some((lo, hi))
    }

    /// Sub-block `lo..=hi` (voxel indices) with the origin moved accordingly.
    pub fn crop(&self, lo: [usize; 3], hi: [usize; 3]) -> Result<Self> {
        let d = self.spec.dims();
        if (0..3).any(|a| lo[a] > hi[a] || hi[a] >= d[a]) {
            return Err(Error::Shape(format!("crop {lo:?}..={hi:?} outside {d:?}")));
        }
        let dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
        let spec = GridSpec::new(dims, self.spec.spacing(), self.spec.center(lo))?;
        let mut values = Vec::with_capacity(spec.len());
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                let start = self.spec.index(lo[0], j, k);
                values.extend_from_slice(&self.values[start..start + dims[0]]);
            }
        }
        Ok(ScalarField::from_raw(spec, values))
    }

    /// Crop to the bounding box of the nonzero support; an all-zero field is
    /// returned unchanged.
    pub fn crop_to_support(&self) -> Self {
        match self.support_bounds() {
            Some((lo, hi)) => self.crop(lo, hi).expect("support bounds are in range"),
            None => self.clone(),
        }
    }

    /// Multilinear interpolation at a fractional voxel index. Samples outside
    /// the grid read as zero. On planar grids the `z` coordinate is ignored.
    pub fn sample_index(&self, p: [f64; 3]) -> f64 {
        let d = self.spec.dims();
        let planar = self.spec.is_planar();
        let axes = if planar { 2 } else { 3 };
        let mut base = [0i64; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..axes {
            let f = p[a].floor();
            base[a] = f as i64;
            frac[a] = p[a] - f;
        }
        let corners = 1usize << axes;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut w = 1.0;
            let mut idx = [0i64; 3];
            for a in 0..axes {
                let bit = (c >> a) & 1;
                idx[a] = base[a] + bit as i64;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            if (0..3).any(|a| idx[a] < 0 || idx[a] >= d[a] as i64) {
                continue;
            }
            acc += w * self.values[self.spec.index(idx[0] as usize, idx[1] as usize, idx[2] as usize)];
        }
        acc
    }

    /// Multilinear interpolation at a world point.
    pub fn sample_world(&self, p: [f64; 3]) -> f64 {
        self.sample_index(self.spec.to_index_space(p))
    }

    /// Voxelwise minimum of two fields on the same grid.
    pub fn pointwise_min(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    /// Binary intersection `self ∩ other` (nonzero means member).
    pub fn and(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| indicator(a != 0.0 && b != 0.0))
    }

    /// Binary union.
    pub fn or(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| indicator(a != 0.0 || b != 0.0))
    }

    /// Binary difference `self − other`.
    pub fn and_not(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| indicator(a != 0.0 && b == 0.0))
    }
}

#[inline]
pub(crate) fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Lebesgue measure of a field as a voxel sum: `dv · Σ f`.
pub fn volume_integral(f: &ScalarField) -> f64 {
    f.volume_integral()
}

/// Binary field that is 1 where `f > tau` (strict) and 0 elsewhere.
pub fn threshold(f: &ScalarField, tau: f64) -> Result<ScalarField> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::param("tau", format!("threshold must lie in (0, 1), got {tau}")));
    }
    Ok(ScalarField::from_raw(
        *f.spec(),
        f.values().iter().map(|&v| indicator(v > tau)).collect(),
    ))
}

/// Implicit union of a density with a binary obstacle indicator,
/// `clamp(ρ + 1_F, 0, 1)`.
pub fn implicit_union(rho: &ScalarField, indicator_f: &ScalarField) -> Result<ScalarField> {
    rho.spec().ensure_matches(indicator_f.spec(), "implicit_union")?;
    rho.zip_with(indicator_f, |r, f| (r + f).clamp(0.0, 1.0))
}

/// The accessible (A), inaccessible (B) and secluded (Γ) masks over the
/// design domain.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMasks {
    pub accessible: ScalarField,
    pub inaccessible: ScalarField,
    pub secluded: ScalarField,
}

impl RegionMasks {
    /// Check the partition and containment invariants against the domain
    /// `Ω₀` and the (binary) design `Ω`.
    pub fn check(&self, domain: &ScalarField, design: &ScalarField) -> Result<()> {
        let a = self.accessible.values();
        let b = self.inaccessible.values();
        let g = self.secluded.values();
        let d = domain.values();
        let w = design.values();
        for idx in 0..a.len() {
            let in_domain = indicator(d[idx] != 0.0);
            if a[idx] * b[idx] != 0.0 || a[idx] + b[idx] != in_domain {
                return Err(Error::Invariant(format!("A/B do not partition the domain at voxel {idx}")));
            }
            if g[idx] > b[idx] || (g[idx] != 0.0 && w[idx] != 0.0) {
                return Err(Error::Invariant(format!("secluded mask not inside B − Ω at voxel {idx}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid2(nx: usize, ny: usize) -> GridSpec {
        GridSpec::planar(nx, ny, 1.0).unwrap()
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new([0, 1, 1], [1.0; 3], [0.0; 3]).is_err());
        assert!(GridSpec::new([1, 1, 1], [1.0, -1.0, 1.0], [0.0; 3]).is_err());
        assert!(GridSpec::new([1, 1, 1], [1.0, 0.0, 1.0], [0.0; 3]).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::new([3, 4, 5], [1.0; 3], [0.0; 3]).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.ijk(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index(0, 0, 1), 12);
    }

    #[test]
    fn volume_of_ones_and_zeros() {
        let g = grid2(4, 4);
        assert_eq!(volume_integral(&ScalarField::constant(g, 1.0)), 16.0);
        assert_eq!(volume_integral(&ScalarField::zeros(g)), 0.0);
    }

    #[test]
    fn volume_matches_double_loop() {
        let g = GridSpec::new([8, 8, 1], [0.5, 0.5, 1.0], [0.0; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = ScalarField::from_fn(g, |_| rng.gen::<f64>()).unwrap();
        let mut oracle = 0.0;
        for j in 0..8 {
            for i in 0..8 {
                oracle += f.get([i, j, 0]) * 0.25;
            }
        }
        let got = volume_integral(&f);
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs());
    }

    #[test]
    fn threshold_conventions() {
        let g = grid2(3, 2);
        let f = ScalarField::constant(g, 0.6);
        assert!(threshold(&f, 0.5).unwrap().values().iter().all(|&v| v == 1.0));
        let at = ScalarField::constant(g, 0.5);
        assert_eq!(threshold(&at, 0.5).unwrap().count_nonzero(), 0);
        assert!(threshold(&f, 0.0).is_err());
        assert!(threshold(&f, 1.0).is_err());
    }

    #[test]
    fn threshold_matches_elementwise() {
        let g = grid2(6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = ScalarField::from_fn(g, |_| rng.gen::<f64>()).unwrap();
        let t = threshold(&f, 0.5).unwrap();
        for (v, b) in f.values().iter().zip(t.values()) {
            assert_eq!(*b, if *v > 0.5 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn implicit_union_cases() {
        let g = grid2(4, 1);
        let rho = ScalarField::new(g, vec![0.1, 0.7, 0.0, 0.3]).unwrap();
        let empty = ScalarField::zeros(g);
        assert_eq!(implicit_union(&rho, &empty).unwrap(), rho);
        let fix = ScalarField::new(g, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let u = implicit_union(&rho, &fix).unwrap();
        assert_eq!(u.values(), &[0.1, 1.0, 1.0, 0.3]);
        let other = ScalarField::zeros(grid2(2, 2));
        assert!(matches!(implicit_union(&rho, &other), Err(Error::Shape(_))));
    }

    #[test]
    fn crop_and_sample() {
        let g = grid2(5, 4);
        let f = ScalarField::from_fn(g, |[i, j, _]| (i + 10 * j) as f64).unwrap();
        let c = f.crop([1, 1, 0], [3, 2, 0]).unwrap();
        assert_eq!(c.spec().dims(), [3, 2, 1]);
        assert_eq!(c.get([0, 0, 0]), 11.0);
        assert_eq!(c.spec().origin(), g.center([1, 1, 0]));
        assert_eq!(f.sample_index([1.5, 2.0, 0.0]), 21.5);
        assert_eq!(f.sample_index([-1.0, 0.0, 0.0]), 0.0);
        assert_eq!(f.sample_world(g.center([2, 3, 0])), 32.0);
    }

    proptest::proptest! {
        #[test]
        fn volume_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            let g = GridSpec::new([5, 4, 3], [0.3, 0.3, 0.3], [0.0; 3]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::from_fn(g, |_| rng.gen::<f64>()).unwrap();
            let h = ScalarField::from_fn(g, |_| rng.gen::<f64>()).unwrap();
            let lin = f.zip_with(&h, |x, y| a * x + b * y).unwrap();
            let lhs = volume_integral(&lin);
            let rhs = a * volume_integral(&f) + b * volume_integral(&h);
            let scale = (a.abs() * volume_integral(&f) + b.abs() * volume_integral(&h)).max(1e-300);
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn threshold_is_idempotent(seed in 0u64..1000, tau in 0.05f64..0.95) {
            let g = grid2(7, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::from_fn(g, |_| rng.gen::<f64>()).unwrap();
            let once = threshold(&f, tau).unwrap();
            let twice = threshold(&once, tau).unwrap();
            proptest::prop_assert_eq!(once, twice);
        }
    }
}
