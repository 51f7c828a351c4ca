//! Matrix-free linear elasticity on the voxel grid.
//!
//! Every voxel is one element: a plane-stress quadrilateral on planar grids
//! (thickness = `z` spacing) or a trilinear hexahedron otherwise. Nodes sit
//! at voxel corners, node `(i, j, k)` having index
//! `i + (nx + 1)·(j + (ny + 1)·k)`, and DOF `c` of node `n` is `n·ndim + c`.
//! Element stiffness is scaled by the modified SIMP law
//! `E·(ρ_min + (1 − ρ_min)·ρᵖ)`.

pub mod element;

use rayon::prelude::*;

use crate::grid::{GridSpec, ScalarField};
use crate::scene::Aabb;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialModel {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub simp_exponent: f64,
    pub rho_min: f64,
}

impl Default for MaterialModel {
    fn default() -> Self {
        MaterialModel {
            youngs_modulus: 1.0,
            poisson_ratio: 0.3,
            simp_exponent: 3.0,
            rho_min: 1e-3,
        }
    }
}

impl MaterialModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite()) {
            return Err(Error::param("youngs_modulus", format!("must be > 0, got {}", self.youngs_modulus)));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::param("poisson_ratio", format!("must lie in (-1, 0.5), got {}", self.poisson_ratio)));
        }
        if !(self.simp_exponent >= 1.0 && self.simp_exponent.is_finite()) {
            return Err(Error::param("simp_exponent", format!("must be >= 1, got {}", self.simp_exponent)));
        }
        if !(self.rho_min > 0.0 && self.rho_min < 1.0) {
            return Err(Error::param("rho_min", format!("must lie in (0, 1), got {}", self.rho_min)));
        }
        Ok(())
    }

    /// Stiffness scale of an element of density `rho`.
    #[inline]
    pub fn stiffness_scale(&self, rho: f64) -> f64 {
        self.youngs_modulus * (self.rho_min + (1.0 - self.rho_min) * rho.powf(self.simp_exponent))
    }

    /// Derivative of [`MaterialModel::stiffness_scale`] with respect to `rho`.
    #[inline]
    pub fn stiffness_scale_derivative(&self, rho: f64) -> f64 {
        let p = self.simp_exponent;
        self.youngs_modulus * p * (1.0 - self.rho_min) * rho.powf(p - 1.0)
    }
}

/// Node and DOF numbering of the finite-element mesh over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    spec: GridSpec,
    ndim: usize,
    nodes: [usize; 3],
}

impl Mesh {
    pub fn new(spec: &GridSpec) -> Self {
        let [nx, ny, nz] = spec.dims();
        let planar = spec.is_planar();
        Mesh {
            spec: *spec,
            ndim: if planar { 2 } else { 3 },
            nodes: [nx + 1, ny + 1, if planar { 1 } else { nz + 1 }],
        }
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn node_dims(&self) -> [usize; 3] {
        self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn dof_count(&self) -> usize {
        self.node_count() * self.ndim
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nodes[0] * (j + self.nodes[1] * k)
    }

    #[inline]
    pub fn dof(&self, node: usize, axis: usize) -> usize {
        node * self.ndim + axis
    }

    /// World position of a node (a voxel corner). Planar meshes report the
    /// grid's `z` origin.
    pub fn node_position(&self, node: usize) -> [f64; 3] {
        let i = node % self.nodes[0];
        let j = (node / self.nodes[0]) % self.nodes[1];
        let k = node / (self.nodes[0] * self.nodes[1]);
        let o = self.spec.origin();
        let s = self.spec.spacing();
        let mut p = [
            o[0] + s[0] * (i as f64 - 0.5),
            o[1] + s[1] * (j as f64 - 0.5),
            o[2] + s[2] * (k as f64 - 0.5),
        ];
        if self.ndim == 2 {
            p[2] = o[2];
        }
        p
    }

    fn nodes_per_element(&self) -> usize {
        1 << self.ndim
    }

    /// Global node of local corner `a` of element `(i, j, k)`.
    #[inline]
    fn element_node(&self, ijk: [usize; 3], a: usize) -> usize {
        let dz = if self.ndim == 3 { (a >> 2) & 1 } else { 0 };
        self.node(ijk[0] + (a & 1), ijk[1] + ((a >> 1) & 1), ijk[2] + dz)
    }

    /// Reference stiffness for unit `E`.
    pub fn reference_stiffness(&self, nu: f64) -> Vec<f64> {
        let s = self.spec.spacing();
        if self.ndim == 2 {
            element::quad_stiffness(nu, s[0], s[1], s[2])
        } else {
            element::hex_stiffness(nu, s[0], s[1], s[2])
        }
    }
}

/// Dirichlet constraints and nodal forces.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadCase {
    fixed: Vec<bool>,
    forces: Vec<f64>,
}

impl LoadCase {
    /// `fixed_dofs` are DOF indices held at zero; `forces` lists
    /// `(dof, value)` pairs, summed when a DOF repeats.
    pub fn new(mesh: &Mesh, fixed_dofs: &[usize], forces: &[(usize, f64)]) -> Result<Self> {
        let n = mesh.dof_count();
        let mut fixed = vec![false; n];
        for &d in fixed_dofs {
            if d >= n {
                return Err(Error::param("fixed_dofs", format!("dof {d} out of range ({n} dofs)")));
            }
            fixed[d] = true;
        }
        let mut f = vec![0.0; n];
        for &(d, v) in forces {
            if d >= n || !v.is_finite() {
                return Err(Error::param("forces", format!("bad force entry ({d}, {v})")));
            }
            f[d] += v;
        }
        if !fixed.iter().any(|&b| b) {
            return Err(Error::Invariant("load case fixes no DOFs".into()));
        }
        if !f.iter().zip(&fixed).any(|(&v, &b)| v != 0.0 && !b) {
            return Err(Error::Invariant("load case has no force on a free DOF".into()));
        }
        Ok(LoadCase { fixed, forces: f })
    }

    /// Load case from node-selection boxes: each support box fixes the
    /// listed axes of every node inside it, and each load box spreads a
    /// total force evenly over its nodes.
    pub fn from_selections(
        spec: &GridSpec,
        supports: &[(Aabb, [bool; 3])],
        loads: &[(Aabb, [f64; 3])],
    ) -> Result<Self> {
        let mesh = Mesh::new(spec);
        let tol = 1e-9 * spec.spacing()[0];
        let inside = |b: &Aabb, p: [f64; 3]| {
            (0..mesh.ndim).all(|a| p[a] >= b.min[a] - tol && p[a] <= b.max[a] + tol)
        };
        let mut fixed = Vec::new();
        for (b, axes) in supports {
            let before = fixed.len();
            for n in 0..mesh.node_count() {
                if inside(b, mesh.node_position(n)) {
                    for a in 0..mesh.ndim {
                        if axes[a] {
                            fixed.push(mesh.dof(n, a));
                        }
                    }
                }
            }
            if fixed.len() == before {
                return Err(Error::param("supports", format!("support box {b:?} selects no nodes")));
            }
        }
        let mut forces = Vec::new();
        for (b, total) in loads {
            let nodes: Vec<usize> = (0..mesh.node_count()).filter(|&n| inside(b, mesh.node_position(n))).collect();
            if nodes.is_empty() {
                return Err(Error::param("loads", format!("load box {b:?} selects no nodes")));
            }
            let share = 1.0 / nodes.len() as f64;
            for &n in &nodes {
                for a in 0..mesh.ndim {
                    if total[a] != 0.0 {
                        forces.push((mesh.dof(n, a), total[a] * share));
                    }
                }
            }
        }
        LoadCase::new(&mesh, &fixed, &forces)
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    pub fn forces(&self) -> &[f64] {
        &self.forces
    }

    pub fn dof_count(&self) -> usize {
        self.forces.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeSolution {
    pub displacements: Vec<f64>,
    /// `φ = fᵀu`.
    pub compliance: f64,
    pub cg_iterations: usize,
    /// Relative residual `‖r‖ / ‖f‖` over free DOFs.
    pub residual: f64,
}

/// Assembled-on-the-fly stiffness operator for one density field.
struct Operator {
    mesh: Mesh,
    k0: Vec<f64>,
    scale: Vec<f64>,
}

impl Operator {
    fn new(rho: &ScalarField, model: &MaterialModel) -> Self {
        let mesh = Mesh::new(rho.spec());
        Operator {
            k0: mesh.reference_stiffness(model.poisson_ratio),
            scale: rho.values().iter().map(|&r| model.stiffness_scale(r)).collect(),
            mesh,
        }
    }

    /// Visit `(element index, local corner)` pairs touching a node, in a
    /// fixed order.
    #[inline]
    fn for_each_element_of_node(&self, node: usize, mut f: impl FnMut(usize, [usize; 3], usize)) {
        let nd = self.mesh.nodes;
        let dims = self.mesh.spec.dims();
        let ni = node % nd[0];
        let nj = (node / nd[0]) % nd[1];
        let nk = node / (nd[0] * nd[1]);
        for a in 0..self.mesh.nodes_per_element() {
            let (dx, dy, dz) = (a & 1, (a >> 1) & 1, (a >> 2) & 1);
            if ni < dx || nj < dy || nk < dz {
                continue;
            }
            let (ei, ej, ek) = (ni - dx, nj - dy, nk - dz);
            if ei >= dims[0] || ej >= dims[1] || ek >= dims[2] {
                continue;
            }
            f(ei + dims[0] * (ej + dims[1] * ek), [ei, ej, ek], a);
        }
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let nd = self.mesh.ndim;
        let npe = self.mesh.nodes_per_element();
        let n = npe * nd;
        out.par_chunks_mut(nd).enumerate().for_each(|(node, o)| {
            o.iter_mut().for_each(|v| *v = 0.0);
            self.for_each_element_of_node(node, |e, ijk, a| {
                let s = self.scale[e];
                for b in 0..npe {
                    let gb = self.mesh.element_node(ijk, b);
                    for c in 0..nd {
                        let row = (a * nd + c) * n;
                        let mut acc = 0.0;
                        for d in 0..nd {
                            acc += self.k0[row + b * nd + d] * u[gb * nd + d];
                        }
                        o[c] += s * acc;
                    }
                }
            });
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        let nd = self.mesh.ndim;
        let n = self.mesh.nodes_per_element() * nd;
        let mut out = vec![0.0; self.mesh.dof_count()];
        out.par_chunks_mut(nd).enumerate().for_each(|(node, o)| {
            self.for_each_element_of_node(node, |e, _, a| {
                for c in 0..nd {
                    let r = a * nd + c;
                    o[c] += self.scale[e] * self.k0[r * n + r];
                }
            });
        });
        out
    }
}

/// `K(ρ)·u`.
pub fn apply_stiffness(rho: &ScalarField, u: &[f64], model: &MaterialModel) -> Result<Vec<f64>> {
    let op = Operator::new(rho, model);
    if u.len() != op.mesh.dof_count() {
        return Err(Error::Shape(format!(
            "displacement vector has {} entries, mesh has {} dofs",
            u.len(),
            op.mesh.dof_count()
        )));
    }
    let mut out = vec![0.0; u.len()];
    op.apply(u, &mut out);
    Ok(out)
}

/// Diagonal of `K(ρ)`.
pub fn stiffness_diagonal(rho: &ScalarField, model: &MaterialModel) -> Vec<f64> {
    Operator::new(rho, model).diagonal()
}

/// Solver controls for [`solve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

/// Solve `K(ρ)u = f` with Jacobi-preconditioned conjugate gradients.
pub fn solve(rho: &ScalarField, load: &LoadCase, model: &MaterialModel, tol: f64, max_iter: usize) -> Result<FeSolution> {
    solve_with(rho, load, model, &CgOptions { tol, max_iter }, None)
}

/// [`solve`] with an optional starting guess (fixed DOFs are reset to 0).
pub fn solve_with(
    rho: &ScalarField,
    load: &LoadCase,
    model: &MaterialModel,
    opts: &CgOptions,
    guess: Option<&[f64]>,
) -> Result<FeSolution> {
    model.validate()?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::param("tol", "CG needs tol > 0 and max_iter >= 1"));
    }
    let op = Operator::new(rho, model);
    let n = op.mesh.dof_count();
    if load.dof_count() != n {
        return Err(Error::Shape(format!("load case has {} dofs, mesh has {n}", load.dof_count())));
    }
    let f: Vec<f64> = (0..n).map(|d| if load.fixed[d] { 0.0 } else { load.forces[d] }).collect();
    let f_norm = dot(&f, &f).sqrt();
    if f_norm == 0.0 {
        return Ok(FeSolution {
            displacements: vec![0.0; n],
            compliance: 0.0,
            cg_iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = op
        .diagonal()
        .iter()
        .zip(&load.fixed)
        .map(|(&d, &fx)| if fx { 0.0 } else { 1.0 / d })
        .collect();
    let mut u = match guess {
        Some(g) if g.len() == n => g.iter().zip(&load.fixed).map(|(&v, &fx)| if fx { 0.0 } else { v }).collect(),
        _ => vec![0.0; n],
    };
    let mut ku = vec![0.0; n];
    op.apply(&u, &mut ku);
    let mut r: Vec<f64> = (0..n).map(|d| if load.fixed[d] { 0.0 } else { f[d] - ku[d] }).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut kp = vec![0.0; n];
    let mut history = Vec::new();
    let mut res = dot(&r, &r).sqrt() / f_norm;
    let mut it = 0;
    while res > opts.tol {
        if it == opts.max_iter {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: res,
                history,
            });
        }
        op.apply(&p, &mut kp);
        for d in 0..n {
            if load.fixed[d] {
                kp[d] = 0.0;
            }
        }
        let pkp = dot(&p, &kp);
        if !(pkp > 0.0) {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: res,
                history,
            });
        }
        let alpha = rz / pkp;
        u.par_iter_mut().zip(&p).for_each(|(x, &pi)| *x += alpha * pi);
        r.par_iter_mut().zip(&kp).for_each(|(x, &ki)| *x -= alpha * ki);
        z.par_iter_mut()
            .zip(&r)
            .zip(&inv_diag)
            .for_each(|((zi, &ri), &di)| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, &zi)| *pi = zi + beta * *pi);
        it += 1;
        res = dot(&r, &r).sqrt() / f_norm;
        history.push(res);
    }
    let compliance = dot(&load.forces, &u);
    Ok(FeSolution {
        displacements: u,
        compliance,
        cg_iterations: it,
        residual: res,
    })
}

/// Sequential dot product, so results do not depend on thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Element energies `u_eᵀ k₀ u_e` for unit `E`.
pub fn element_energies(rho: &ScalarField, u: &[f64], model: &MaterialModel) -> Result<ScalarField> {
    let mesh = Mesh::new(rho.spec());
    if u.len() != mesh.dof_count() {
        return Err(Error::Shape("displacement vector does not match the mesh".into()));
    }
    let k0 = mesh.reference_stiffness(model.poisson_ratio);
    let nd = mesh.ndim;
    let npe = mesh.nodes_per_element();
    let n = npe * nd;
    let spec = *rho.spec();
    let values: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|e| {
            let ijk = spec.ijk(e);
            let mut ue = [0.0; 24];
            for a in 0..npe {
                let g = mesh.element_node(ijk, a);
                for c in 0..nd {
                    ue[a * nd + c] = u[g * nd + c];
                }
            }
            let mut acc = 0.0;
            for r in 0..n {
                let mut row = 0.0;
                for c in 0..n {
                    row += k0[r * n + c] * ue[c];
                }
                acc += ue[r] * row;
            }
            acc
        })
        .collect();
    ScalarField::new(spec, values)
}

/// Compliance sensitivity `∂φ/∂ρ_e = −E·p·(1 − ρ_min)·ρ_eᵖ⁻¹ · u_eᵀk₀u_e`,
/// non-positive everywhere.
pub fn compliance_sensitivity(rho: &ScalarField, sol: &FeSolution, model: &MaterialModel) -> Result<ScalarField> {
    let energy = element_energies(rho, &sol.displacements, model)?;
    rho.zip_with(&energy, |r, w| -model.stiffness_scale_derivative(r) * w)
}

/// Divide by `max |S|`; an all-zero field stays zero.
pub fn normalize_sensitivity(s: &ScalarField) -> ScalarField {
    let m = s.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return s.clone();
    }
    s.map(|v| v / m).expect("finite after scaling")
}
