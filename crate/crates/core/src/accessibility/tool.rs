use crate::grid::{GridSpec, ScalarField};
use crate::morphology::Orientation;
use crate::{Error, Result};

/// Which part of the assembly a profile segment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToolPart {
    Cutter,
    Holder,
}

/// Cross-section of one segment of a tool profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentShape {
    /// Round cross-section. On planar grids this is a slab of half-width
    /// `radius`.
    Cylinder { radius: f64 },
    /// Square cross-section.
    Box { half_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolSegment {
    pub part: ToolPart,
    pub shape: SegmentShape,
    pub length: f64,
}

/// A tool described as segments stacked along its axis, starting at the
/// cutter tip.
///
/// The axis is `+y` on planar grids and `+z` otherwise; the tip voxel is
/// centered on the local origin. Orientations built with
/// [`Orientation::from_direction`] turn that axis toward the approach
/// direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolProfile {
    pub segments: Vec<ToolSegment>,
}

impl ToolProfile {
    pub fn new(segments: Vec<ToolSegment>) -> Self {
        ToolProfile { segments }
    }

    /// Voxelize into `(holder, cutter)` indicators on a shared local grid of
    /// spacing `h`.
    pub fn voxelize(&self, h: f64, planar: bool) -> Result<(ScalarField, ScalarField)> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param("h", format!("voxel size must be > 0, got {h}")));
        }
        if self.segments.is_empty() {
            return Err(Error::param("segments", "tool profile has no segments"));
        }
        let eps = 1e-9 * h;
        let mut reach = 0.0f64;
        let mut total = 0.0;
        for s in &self.segments {
            if !(s.length > 0.0 && s.length.is_finite()) {
                return Err(Error::param("length", format!("segment length must be > 0, got {}", s.length)));
            }
            let r = match s.shape {
                SegmentShape::Cylinder { radius } => radius,
                SegmentShape::Box { half_width } => half_width,
            };
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::param("radius", format!("cross-section size must be >= 0, got {r}")));
            }
            reach = reach.max(r);
            total += s.length;
        }
        let lat = ((reach + eps) / h).floor() as usize;
        let n_axis = ((total - eps) / h).floor() as usize + 1;
        let w = 2 * lat + 1;
        let (dims, origin) = if planar {
            ([w, n_axis, 1], [-(lat as f64) * h, 0.0, 0.0])
        } else {
            ([w, w, n_axis], [-(lat as f64) * h, -(lat as f64) * h, 0.0])
        };
        let spacing = if planar { [h, h, 1.0] } else { [h; 3] };
        let spec = GridSpec::new(dims, spacing, origin)?;
        let mut holder = vec![0.0; spec.len()];
        let mut cutter = vec![0.0; spec.len()];
        for (idx, (hv, cv)) in holder.iter_mut().zip(cutter.iter_mut()).enumerate() {
            let p = spec.center(spec.ijk(idx));
            let (axial, lateral) = if planar {
                (p[1], [p[0], 0.0])
            } else {
                (p[2], [p[0], p[1]])
            };
            let mut start = 0.0;
            for s in &self.segments {
                let end = start + s.length;
                if axial >= start - eps && axial < end - eps {
                    let inside = match s.shape {
                        SegmentShape::Cylinder { radius } => {
                            lateral[0] * lateral[0] + lateral[1] * lateral[1] <= radius * radius + eps
                        }
                        SegmentShape::Box { half_width } => {
                            lateral[0].abs() <= half_width + eps && lateral[1].abs() <= half_width + eps
                        }
                    };
                    if inside {
                        match s.part {
                            ToolPart::Cutter => *cv = 1.0,
                            ToolPart::Holder => *hv = 1.0,
                        }
                    }
                    break;
                }
                start = end;
            }
        }
        Ok((ScalarField::new(spec, holder)?, ScalarField::new(spec, cutter)?))
    }
}

/// Holder `H` and cutter `K` indicators on a shared local grid, the sharp
/// points of `K` and the allowed orientations `Θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolAssembly {
    holder: ScalarField,
    cutter: ScalarField,
    assembly: ScalarField,
    sharp_points: Vec<[usize; 3]>,
    orientations: Vec<Orientation>,
}

impl ToolAssembly {
    /// `sharp_points` are voxel indices into the local grid; each must be a
    /// cutter voxel with at least one face neighbor outside the cutter.
    pub fn new(
        holder: ScalarField,
        cutter: ScalarField,
        sharp_points: Vec<[usize; 3]>,
        orientations: Vec<Orientation>,
    ) -> Result<Self> {
        let spec = *cutter.spec();
        spec.ensure_matches(holder.spec(), "tool holder vs cutter")?;
        if !holder.is_binary() || !cutter.is_binary() {
            return Err(Error::Invariant("holder and cutter must be binary".into()));
        }
        if holder.and(&cutter)?.count_nonzero() > 0 {
            return Err(Error::Invariant("holder and cutter overlap".into()));
        }
        if cutter.count_nonzero() == 0 {
            return Err(Error::Invariant("cutter is empty".into()));
        }
        if sharp_points.is_empty() {
            return Err(Error::Invariant("tool has no sharp points".into()));
        }
        if orientations.is_empty() {
            return Err(Error::Invariant("tool has no orientations".into()));
        }
        for o in &orientations {
            if o.is_planar() != spec.is_planar() {
                return Err(Error::Invariant(format!(
                    "orientation {} does not match the tool grid dimensionality",
                    o.id
                )));
            }
        }
        let d = spec.dims();
        for &k in &sharp_points {
            if (0..3).any(|a| k[a] >= d[a]) || cutter.get(k) == 0.0 {
                return Err(Error::Invariant(format!("sharp point {k:?} is not a cutter voxel")));
            }
            if !has_face_neighbor(&cutter, k, |v| v == 0.0) {
                return Err(Error::Invariant(format!("sharp point {k:?} is not on the cutter boundary")));
            }
        }
        let assembly = holder.or(&cutter)?;
        Ok(ToolAssembly {
            holder,
            cutter,
            assembly,
            sharp_points,
            orientations,
        })
    }

    /// Assembly with the default sharp points, see [`default_sharp_points`].
    pub fn with_default_sharp_points(
        holder: ScalarField,
        cutter: ScalarField,
        stride: usize,
        orientations: Vec<Orientation>,
    ) -> Result<Self> {
        let sharp = default_sharp_points(&holder, &cutter, stride)?;
        ToolAssembly::new(holder, cutter, sharp, orientations)
    }

    pub fn from_profile(
        profile: &ToolProfile,
        h: f64,
        planar: bool,
        stride: usize,
        orientations: Vec<Orientation>,
    ) -> Result<Self> {
        let (holder, cutter) = profile.voxelize(h, planar)?;
        ToolAssembly::with_default_sharp_points(holder, cutter, stride, orientations)
    }

    pub fn holder(&self) -> &ScalarField {
        &self.holder
    }

    pub fn cutter(&self) -> &ScalarField {
        &self.cutter
    }

    /// `T = H ∪ K`.
    pub fn assembly(&self) -> &ScalarField {
        &self.assembly
    }

    pub fn sharp_points(&self) -> &[[usize; 3]] {
        &self.sharp_points
    }

    /// Sharp points as positions in the tool's local frame.
    pub fn sharp_positions(&self) -> Vec<[f64; 3]> {
        self.sharp_points.iter().map(|&k| self.cutter.spec().center(k)).collect()
    }

    pub fn orientations(&self) -> &[Orientation] {
        &self.orientations
    }

    pub fn with_orientations(&self, orientations: Vec<Orientation>) -> Result<Self> {
        ToolAssembly::new(self.holder.clone(), self.cutter.clone(), self.sharp_points.clone(), orientations)
    }

    pub fn with_sharp_points(&self, sharp_points: Vec<[usize; 3]>) -> Result<Self> {
        ToolAssembly::new(self.holder.clone(), self.cutter.clone(), sharp_points, self.orientations.clone())
    }
}

/// Cutter voxels with a face neighbor outside `H ∪ K`, keeping every
/// `stride`-th one in index order.
pub fn default_sharp_points(holder: &ScalarField, cutter: &ScalarField, stride: usize) -> Result<Vec<[usize; 3]>> {
    if stride == 0 {
        return Err(Error::param("stride", "sharp-point stride must be >= 1"));
    }
    let tool = holder.or(cutter)?;
    let spec = cutter.spec();
    let boundary: Vec<[usize; 3]> = cutter
        .support()
        .map(|idx| spec.ijk(idx))
        .filter(|&k| has_face_neighbor(&tool, k, |v| v == 0.0))
        .collect();
    Ok(boundary.into_iter().step_by(stride).collect())
}

/// Whether some face neighbor of `k` (voxels beyond the grid read as 0)
/// satisfies `pred`.
fn has_face_neighbor(f: &ScalarField, k: [usize; 3], pred: impl Fn(f64) -> bool) -> bool {
    let d = f.spec().dims();
    let axes = if f.spec().is_planar() { 2 } else { 3 };
    for a in 0..axes {
        for step in [-1i64, 1] {
            let n = k[a] as i64 + step;
            let v = if n < 0 || n >= d[a] as i64 {
                0.0
            } else {
                let mut m = k;
                m[a] = n as usize;
                f.get(m)
            };
            if pred(v) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn endmill() -> ToolProfile {
        ToolProfile::new(vec![
            ToolSegment {
                part: ToolPart::Cutter,
                shape: SegmentShape::Cylinder { radius: 1.0 },
                length: 3.0,
            },
            ToolSegment {
                part: ToolPart::Holder,
                shape: SegmentShape::Box { half_width: 2.0 },
                length: 4.0,
            },
        ])
    }

    #[test]
    fn planar_profile_voxelizes_to_stacked_slabs() {
        let (h, k) = endmill().voxelize(1.0, true).unwrap();
        assert_eq!(k.spec().dims(), [5, 7, 1]);
        assert_eq!(k.spec().origin(), [-2.0, 0.0, 0.0]);
        assert_eq!(k.count_nonzero(), 9);
        assert_eq!(h.count_nonzero(), 20);
        assert_eq!(k.get([2, 0, 0]), 1.0);
    }

    #[test]
    fn default_sharp_points_skip_the_holder_interface() {
        let (h, k) = endmill().voxelize(1.0, true).unwrap();
        let sp = default_sharp_points(&h, &k, 1).unwrap();
        // the 3x3 cutter: every voxel except the center touches air, but the
        // top row touches only holder and cutter except at the sides
        assert!(sp.contains(&[2, 0, 0]));
        assert!(!sp.contains(&[2, 1, 0]));
        assert!(!sp.contains(&[2, 2, 0]));
        assert_eq!(sp.len(), 7);
        let every_other = default_sharp_points(&h, &k, 2).unwrap();
        assert_eq!(every_other.len(), 4);
    }

    #[test]
    fn assembly_invariants_are_enforced() {
        let (h, k) = endmill().voxelize(1.0, true).unwrap();
        let o = vec![Orientation::identity(0, true)];
        assert!(ToolAssembly::new(h.clone(), k.clone(), vec![[2, 1, 0]], o.clone()).is_err());
        assert!(ToolAssembly::new(h.clone(), k.clone(), vec![], o.clone()).is_err());
        assert!(ToolAssembly::new(h.clone(), k.clone(), vec![[2, 0, 0]], vec![]).is_err());
        assert!(ToolAssembly::new(k.clone(), k.clone(), vec![[2, 0, 0]], o.clone()).is_err());
        let spatial = vec![Orientation::identity(0, false)];
        assert!(ToolAssembly::new(h.clone(), k.clone(), vec![[2, 0, 0]], spatial).is_err());
        let t = ToolAssembly::new(h, k, vec![[2, 0, 0]], o).unwrap();
        assert_eq!(t.assembly().count_nonzero(), 29);
        assert_eq!(t.sharp_positions(), vec![[0.0, 0.0, 0.0]]);
    }

    #[test]
    fn spatial_profile_has_round_cutter() {
        let (_, k) = endmill().voxelize(1.0, false).unwrap();
        assert_eq!(k.spec().dims(), [5, 5, 7]);
        // radius 1 disc on the lattice: center plus 4 face neighbors
        assert_eq!(k.count_nonzero(), 5 * 3);
    }
}
