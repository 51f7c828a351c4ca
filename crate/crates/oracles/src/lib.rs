//! Slow, obviously correct reference computations for the `mtopt` test
//! suites, plus the small hand-built scenes they run on.
//!
//! Nothing here uses FFTs, resampling or the matrix-free operator. The
//! geometric oracles enumerate placements voxel by voxel, so they are only
//! exact for orientations that map the lattice onto itself (quarter turns).

use std::collections::HashSet;

use mtopt::accessibility::ToolAssembly;
use mtopt::fea::{MaterialModel, Mesh};
use mtopt::grid::{GridSpec, ScalarField};
use mtopt::morphology::Orientation;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod scenes;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Field with values drawn uniformly from `[0, 1)`.
pub fn random_field(rng: &mut impl Rng, spec: GridSpec) -> ScalarField {
    let values = (0..spec.len()).map(|_| rng.gen::<f64>()).collect();
    ScalarField::new(spec, values).unwrap()
}

/// Binary field with each voxel set with probability `p`.
pub fn random_indicator(rng: &mut impl Rng, spec: GridSpec, p: f64) -> ScalarField {
    let values = (0..spec.len()).map(|_| if rng.gen_bool(p) { 1.0 } else { 0.0 }).collect();
    ScalarField::new(spec, values).unwrap()
}

/// `dv · Σ_i a[i]·b[m − i]` by nested loops, on the same output grid as
/// `mtopt::morphology::convolve`.
pub fn direct_convolution(a: &ScalarField, b: &ScalarField) -> ScalarField {
    let (sa, sb) = (a.spec(), b.spec());
    let (na, nb) = (sa.dims(), sb.dims());
    let dims = [na[0] + nb[0] - 1, na[1] + nb[1] - 1, na[2] + nb[2] - 1];
    let (oa, ob) = (sa.origin(), sb.origin());
    let planar = sa.is_planar() && sb.is_planar();
    let origin = [oa[0] + ob[0], oa[1] + ob[1], if planar { oa[2] } else { oa[2] + ob[2] }];
    let out = GridSpec::new(dims, sa.spacing(), origin).unwrap();
    let mut values = vec![0.0; out.len()];
    for ia in 0..sa.len() {
        let va = a.values()[ia];
        if va == 0.0 {
            continue;
        }
        let [i, j, k] = sa.ijk(ia);
        for ib in 0..sb.len() {
            let [p, q, r] = sb.ijk(ib);
            values[out.index(i + p, j + q, k + r)] += va * b.values()[ib];
        }
    }
    let dv = sa.voxel_volume();
    values.iter_mut().for_each(|v| *v *= dv);
    ScalarField::new(out, values).unwrap()
}

/// Value of `f` at world point `p`, which must be a voxel center of `f`'s
/// lattice (or lie outside the window, reading 0).
pub fn lattice_value(f: &ScalarField, p: [f64; 3]) -> f64 {
    let spec = f.spec();
    let (o, h, d) = (spec.origin(), spec.spacing(), spec.dims());
    let mut ijk = [0usize; 3];
    for a in 0..3 {
        if spec.is_planar() && a == 2 {
            continue;
        }
        let x = (p[a] - o[a]) / h[a];
        let r = x.round();
        assert!((x - r).abs() < 1e-6, "point {p:?} is off the lattice of {spec:?}");
        if r < 0.0 || r >= d[a] as f64 {
            return 0.0;
        }
        ijk[a] = r as usize;
    }
    f.get(ijk)
}

/// Overlap volume between `obstacle` and the tool indicator rotated by `r`
/// and translated by `t`, by summing over tool voxels.
pub fn placement_overlap(obstacle: &ScalarField, tool: &ScalarField, r: &Orientation, t: [f64; 3]) -> f64 {
    let ts = tool.spec();
    let mut sum = 0.0;
    for idx in tool.support() {
        let q = r.apply(ts.center(ts.ijk(idx)));
        sum += tool.values()[idx] * lattice_value(obstacle, add(t, q));
    }
    sum * obstacle.spec().voxel_volume()
}

/// Inaccessibility measure by enumerating every placement: for each voxel
/// `x`, the least overlap over orientations `R` and sharp points `k` of the
/// assembly placed so that `R·k` lands on `x`.
pub fn imf_exhaustive(rho_o: &ScalarField, tool: &ToolAssembly) -> ScalarField {
    let spec = *rho_o.spec();
    let sharp = tool.sharp_positions();
    let values = (0..spec.len())
        .map(|idx| {
            let x = spec.center(spec.ijk(idx));
            let mut best = f64::INFINITY;
            for r in tool.orientations() {
                for &k in &sharp {
                    let t = sub(x, r.apply(k));
                    best = best.min(placement_overlap(rho_o, tool.assembly(), r, t));
                }
            }
            best
        })
        .collect();
    ScalarField::new(spec, values).unwrap()
}

/// Enumerated Minkowski sum `O ⊕ (−R·T)` as a set of translations, keyed by
/// [`lattice_key`].
pub fn minkowski_enumerated(obstacle: &ScalarField, tool: &ScalarField, r: &Orientation) -> HashSet<[i64; 3]> {
    let (so, st) = (obstacle.spec(), tool.spec());
    let h = so.spacing()[0];
    let mut set = HashSet::new();
    for io in obstacle.support() {
        let o = so.center(so.ijk(io));
        for it in tool.support() {
            let p = r.apply(st.center(st.ijk(it)));
            set.insert(lattice_key(sub(o, p), h));
        }
    }
    set
}

/// Integer key of a point on a lattice of spacing `h` whose nodes sit at
/// integer or half-integer multiples of `h`.
pub fn lattice_key(p: [f64; 3], h: f64) -> [i64; 3] {
    [0, 1, 2].map(|a| (2.0 * p[a] / h).round() as i64)
}

/// Union of cutter placements over every translation whose assembly overlap
/// with `obstacle` is at most `allowance`, restricted to `domain`.
pub fn sweep_union(
    obstacle: &ScalarField,
    tool: &ToolAssembly,
    r: &Orientation,
    allowance: f64,
    domain: &ScalarField,
) -> ScalarField {
    let spec = *domain.spec();
    let h = spec.spacing()[0];
    let ts = tool.assembly().spec();
    let reach = ts.dims().iter().max().copied().unwrap() as i64 + 1;
    let d = spec.dims();
    let planar = spec.is_planar();
    // translations t with t + R·p on the domain lattice
    let anchor = sub(spec.origin(), r.apply(ts.center(ts.ijk(tool.assembly().support().next().unwrap()))));
    let mut out = vec![0.0; spec.len()];
    let kr = if planar { 0..=0 } else { -reach..=d[2] as i64 + reach };
    for mk in kr {
        for mj in -reach..=d[1] as i64 + reach {
            for mi in -reach..=d[0] as i64 + reach {
                let mut t = [anchor[0] + h * mi as f64, anchor[1] + h * mj as f64, anchor[2] + h * mk as f64];
                if planar {
                    t[2] = 0.0;
                }
                if placement_overlap(obstacle, tool.assembly(), r, t) > allowance {
                    continue;
                }
                for idx in tool.cutter().support() {
                    let x = add(t, r.apply(ts.center(ts.ijk(idx))));
                    if let Some(v) = voxel_at(&spec, x) {
                        if domain.values()[v] != 0.0 {
                            out[v] = 1.0;
                        }
                    }
                }
            }
        }
    }
    ScalarField::new(spec, out).unwrap()
}

/// Dense global stiffness matrix (row-major, `n_dof × n_dof`) assembled
/// element by element from the reference element matrix.
pub fn dense_stiffness(rho: &ScalarField, model: &MaterialModel) -> Vec<f64> {
    let spec = rho.spec();
    let mesh = Mesh::new(spec);
    let nd = mesh.ndim();
    let n = mesh.dof_count();
    let ke = mesh.reference_stiffness(model.poisson_ratio);
    let corners = if nd == 2 { 4 } else { 8 };
    let m = corners * nd;
    let mut k = vec![0.0; n * n];
    for e in 0..spec.len() {
        let [i, j, l] = spec.ijk(e);
        let scale = model.stiffness_scale(rho.values()[e]);
        let dofs: Vec<usize> = (0..corners)
            .flat_map(|a| {
                let node = mesh.node(i + (a & 1), j + ((a >> 1) & 1), l + ((a >> 2) & 1));
                (0..nd).map(move |c| node * nd + c)
            })
            .collect();
        for r in 0..m {
            for c in 0..m {
                k[dofs[r] * n + dofs[c]] += scale * ke[r * m + c];
            }
        }
    }
    k
}

pub fn mat_vec(k: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|r| (0..n).map(|c| k[r * n + c] * u[c]).sum()).collect()
}

fn voxel_at(spec: &GridSpec, p: [f64; 3]) -> Option<usize> {
    let (o, h, d) = (spec.origin(), spec.spacing(), spec.dims());
    let mut ijk = [0usize; 3];
    for a in 0..3 {
        if spec.is_planar() && a == 2 {
            continue;
        }
        let x = ((p[a] - o[a]) / h[a]).round();
        if x < 0.0 || x >= d[a] as f64 {
            return None;
        }
        ijk[a] = x as usize;
    }
    Some(spec.index(ijk[0], ijk[1], ijk[2]))
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
