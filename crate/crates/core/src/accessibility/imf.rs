use rayon::prelude::*;

use super::ToolAssembly;
use crate::grid::{GridSpec, ScalarField, LATTICE_EPS};
use crate::morphology::{oriented_kernel, ConvolutionPlan, Orientation};
use crate::{Error, Result};

/// Resource limits for IMF assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImfOptions {
    /// Upper bound on memory held by concurrent convolutions. `None` runs
    /// every orientation of a tool at once.
    pub mem_budget_bytes: Option<usize>,
}

/// Inaccessibility measure of one tool: at each voxel `x`, the least overlap
/// volume between `ρ_O` and the tool over all orientations `R` and sharp
/// points `k`, with `k` placed on `x`.
///
/// Each `(R, k)` pair reads the collision field `ρ_O ∗ reflect(R·T)` at the
/// translation `x − R·k`, interpolating when that falls between lattice
/// points. The result lives on `rho_o`'s grid, in volume units.
pub fn imf_single_tool(rho_o: &ScalarField, tool: &ToolAssembly, opts: &ImfOptions) -> Result<ScalarField> {
    let spec = rho_o.spec();
    if !spec.is_isotropic() {
        return Err(Error::Unsupported(format!(
            "accessibility analysis needs isotropic spacing, got {:?}",
            spec.spacing()
        )));
    }
    if !spec.same_spacing(tool.assembly().spec()) {
        return Err(Error::Shape("tool and design grids have different spacing".into()));
    }
    if spec.is_planar() != tool.assembly().spec().is_planar() {
        return Err(Error::Shape("tool and design grids differ in dimensionality".into()));
    }

    let kernels: Vec<ScalarField> = tool
        .orientations()
        .iter()
        .map(|r| oriented_kernel(tool.assembly(), r))
        .collect::<Result<_>>()?;
    let mut cap = [1usize; 3];
    for k in &kernels {
        let d = k.spec().dims();
        for a in 0..3 {
            cap[a] = cap[a].max(d[a]);
        }
    }
    let plan = ConvolutionPlan::new(rho_o, cap)?;
    let batch = match opts.mem_budget_bytes {
        Some(budget) => (budget / (3 * plan.workspace_bytes()).max(1)).max(1),
        None => kernels.len(),
    };
    let sharp = tool.sharp_positions();

    let mut acc = vec![f64::INFINITY; spec.len()];
    let pairs: Vec<(&Orientation, &ScalarField)> = tool.orientations().iter().zip(&kernels).collect();
    for chunk in pairs.chunks(batch.max(1)) {
        let fields: Vec<Vec<f64>> = chunk
            .par_iter()
            .map(|(r, kernel)| orientation_field(&plan, kernel, r, &sharp, spec))
            .collect::<Result<_>>()?;
        for f in fields {
            acc.iter_mut().zip(&f).for_each(|(a, &v)| *a = a.min(v));
        }
    }
    ScalarField::new(*spec, acc)
}

/// Pointwise minimum of [`imf_single_tool`] over several tools.
pub fn imf_multi_tool(rho_o: &ScalarField, tools: &[ToolAssembly], opts: &ImfOptions) -> Result<ScalarField> {
    Ok(imf_per_tool(rho_o, tools, opts)?.1)
}

/// Per-tool fields and their pointwise minimum.
pub fn imf_per_tool(
    rho_o: &ScalarField,
    tools: &[ToolAssembly],
    opts: &ImfOptions,
) -> Result<(Vec<ScalarField>, ScalarField)> {
    if tools.is_empty() {
        return Err(Error::param("tools", "at least one tool is required"));
    }
    let per_tool: Vec<ScalarField> = tools
        .iter()
        .map(|t| imf_single_tool(rho_o, t, opts))
        .collect::<Result<_>>()?;
    let mut min = per_tool[0].clone();
    for f in &per_tool[1..] {
        min = min.pointwise_min(f)?;
    }
    Ok((per_tool, min))
}

fn orientation_field(
    plan: &ConvolutionPlan,
    kernel: &ScalarField,
    r: &Orientation,
    sharp: &[[f64; 3]],
    design: &GridSpec,
) -> Result<Vec<f64>> {
    let g = plan.convolve(kernel)?;
    let h = design.spacing()[0];
    let od = design.origin();
    let og = g.spec().origin();
    let planar = design.is_planar();
    let mut out = vec![f64::INFINITY; design.len()];
    for k in sharp {
        let rk = r.apply(*k);
        let mut shift = [0.0; 3];
        for a in 0..3 {
            if planar && a == 2 {
                continue;
            }
            let s = (od[a] - og[a] - rk[a]) / h;
            let rs = s.round();
            shift[a] = if (s - rs).abs() < LATTICE_EPS { rs } else { s };
        }
        min_shifted(&mut out, &g, design, shift);
    }
    Ok(out)
}

/// `out[i] = min(out[i], g(i + shift))` over design voxels `i`, with `g`
/// interpolated multilinearly and read as zero outside its window.
fn min_shifted(out: &mut [f64], g: &ScalarField, design: &GridSpec, shift: [f64; 3]) {
    let dd = design.dims();
    let gd = g.spec().dims();
    let gv = g.values();
    let axes = if design.is_planar() { 2 } else { 3 };
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    for a in 0..axes {
        let f = shift[a].floor();
        base[a] = f as i64;
        frac[a] = shift[a] - f;
    }
    // corner offsets with nonzero weight
    let mut corners: Vec<([i64; 3], f64)> = Vec::with_capacity(8);
    for c in 0..(1usize << axes) {
        let mut off = [0i64; 3];
        let mut w = 1.0;
        for a in 0..axes {
            let bit = (c >> a) & 1;
            off[a] = base[a] + bit as i64;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if w != 0.0 {
            corners.push((off, w));
        }
    }
    out.par_chunks_mut(dd[0]).enumerate().for_each(|(row, chunk)| {
        let (j, k) = ((row % dd[1]) as i64, (row / dd[1]) as i64);
        for (i, o) in chunk.iter_mut().enumerate() {
            let mut v = 0.0;
            for (off, w) in &corners {
                let gi = i as i64 + off[0];
                let gj = j + off[1];
                let gk = k + off[2];
                if gi < 0 || gj < 0 || gk < 0 || gi >= gd[0] as i64 || gj >= gd[1] as i64 || gk >= gd[2] as i64 {
                    continue;
                }
                v += w * gv[gi as usize + gd[0] * (gj as usize + gd[1] * gk as usize)];
            }
            if v < *o {
                *o = v;
            }
        }
    });
}
