//! Small planar scenes and tools with known accessibility structure.

use std::f64::consts::FRAC_PI_2;

use mtopt::accessibility::{SegmentShape, ToolAssembly, ToolPart, ToolProfile, ToolSegment};
use mtopt::grid::{GridSpec, ScalarField};
use mtopt::morphology::Orientation;
use mtopt::scene::Scene;

/// A planar test scene. `design` is binary; `rho_o` is what the analysis
/// sees (design plus fixtures, or a graded density).
#[derive(Debug, Clone)]
pub struct Case {
    pub name: &'static str,
    pub design: ScalarField,
    pub fixtures: ScalarField,
    pub rho_o: ScalarField,
    /// Voxels that no collision-free placement can reach.
    pub sealed: Vec<[usize; 3]>,
}

impl Case {
    /// Scene whose design domain is everything but the fixtures.
    pub fn scene(&self) -> Scene {
        let spec = *self.design.spec();
        let domain = ScalarField::constant(spec, 1.0).and_not(&self.fixtures).unwrap();
        let zeros = ScalarField::zeros(spec);
        Scene::new(domain, self.fixtures.clone(), zeros.clone(), zeros).unwrap()
    }
}

/// First `n` quarter turns, starting at the identity.
pub fn quarter_turns(n: usize) -> Vec<Orientation> {
    (0..n).map(|i| Orientation::planar(i, i as f64 * FRAC_PI_2)).collect()
}

/// Slim endmill: a 3-voxel-wide cutter of length 3 under a 5-voxel-wide
/// holder of length 4, tool axis +y, tip at the origin.
pub fn endmill(orientations: Vec<Orientation>, stride: usize) -> ToolAssembly {
    let profile = ToolProfile::new(vec![
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
    ]);
    ToolAssembly::from_profile(&profile, 1.0, true, stride, orientations).unwrap()
}

/// One-voxel-wide cutter of length 3 with a holder bent off to the side,
/// so the tool can reach under an overhang from one direction only.
pub fn l_tool(orientations: Vec<Orientation>) -> ToolAssembly {
    let spec = GridSpec::new([3, 5, 1], [1.0; 3], [0.0; 3]).unwrap();
    let cutter = ScalarField::from_fn(spec, |[i, j, _]| if i == 0 && j < 3 { 1.0 } else { 0.0 }).unwrap();
    let holder = ScalarField::from_fn(spec, |[_, j, _]| if j >= 3 { 1.0 } else { 0.0 }).unwrap();
    ToolAssembly::new(holder, cutter, vec![[0, 0, 0], [0, 1, 0], [0, 2, 0]], orientations).unwrap()
}

fn boxed(spec: GridSpec, f: impl Fn(usize, usize) -> bool) -> ScalarField {
    ScalarField::from_fn(spec, |[i, j, _]| if f(i, j) { 1.0 } else { 0.0 }).unwrap()
}

fn case(name: &'static str, design: ScalarField, fixtures: ScalarField, sealed: Vec<[usize; 3]>) -> Case {
    let rho_o = design.or(&fixtures).unwrap();
    Case {
        name,
        design,
        fixtures,
        rho_o,
        sealed,
    }
}

/// Block with a T-shaped slot: a vertical channel from the top face opens
/// into a wider horizontal pocket.
pub fn undercut() -> Case {
    let spec = GridSpec::planar(24, 16, 1.0).unwrap();
    let design = boxed(spec, |i, j| {
        let block = j < 11;
        let channel = (10..=13).contains(&i) && j >= 7;
        let pocket = (4..=19).contains(&i) && (4..=6).contains(&j);
        block && !channel && !pocket
    });
    case("undercut", design, ScalarField::zeros(spec), Vec::new())
}

/// Solid block with a closed internal cavity.
pub fn sealed_void() -> Case {
    let spec = GridSpec::planar(20, 18, 1.0).unwrap();
    let cavity = |i: usize, j: usize| (8..=11).contains(&i) && (6..=9).contains(&j);
    let design = boxed(spec, |i, j| (3..17).contains(&i) && j < 14 && !cavity(i, j));
    let sealed = (0..spec.len())
        .map(|idx| spec.ijk(idx))
        .filter(|&[i, j, _]| cavity(i, j))
        .collect();
    case("sealed void", design, ScalarField::zeros(spec), sealed)
}

/// Two towers separated by a gap narrower than the cutter.
pub fn narrow_gap() -> Case {
    let spec = GridSpec::planar(20, 16, 1.0).unwrap();
    let design = boxed(spec, |i, j| j < 3 || ((3..9).contains(&i) && j < 12) || ((11..17).contains(&i) && j < 12));
    case("narrow gap", design, ScalarField::zeros(spec), Vec::new())
}

/// Plate held by two clamps that shadow its top corners.
pub fn clamped_plate() -> Case {
    let spec = GridSpec::planar(22, 14, 1.0).unwrap();
    let design = boxed(spec, |i, j| (3..19).contains(&i) && (2..7).contains(&j));
    let fixtures = boxed(spec, |i, j| ((1..6).contains(&i) || (16..21).contains(&i)) && (7..9).contains(&j));
    case("clamped plate", design, fixtures, Vec::new())
}

/// Graded density ramp with a dense core, as seen mid-optimization.
pub fn graded() -> Case {
    let spec = GridSpec::planar(18, 14, 1.0).unwrap();
    let rho = ScalarField::from_fn(spec, |[i, j, _]| {
        let dx = i as f64 - 8.5;
        let dy = j as f64 - 5.0;
        (1.0 - (dx * dx + dy * dy).sqrt() / 8.0).clamp(0.0, 1.0)
    })
    .unwrap();
    let design = rho.map(|v| if v > 0.5 { 1.0 } else { 0.0 }).unwrap();
    Case {
        name: "graded",
        design,
        fixtures: ScalarField::zeros(spec),
        rho_o: rho,
        sealed: Vec::new(),
    }
}

pub fn all() -> Vec<Case> {
    vec![undercut(), sealed_void(), narrow_gap(), clamped_plate(), graded()]
}
