use mtopt::fea::{apply_stiffness, compliance_sensitivity, solve, LoadCase, MaterialModel, Mesh};
use mtopt::grid::{GridSpec, ScalarField};
use mtopt::scene::Aabb;
use mtopt_oracles::{dense_stiffness, mat_vec, random_field, rng};
use rand::Rng;

fn random_density(seed: u64, spec: GridSpec) -> ScalarField {
    let mut rng = rng(seed);
    random_field(&mut rng, spec).map(|v| 0.1 + 0.9 * v).unwrap()
}

fn grids() -> Vec<GridSpec> {
    vec![
        GridSpec::planar(4, 4, 1.0).unwrap(),
        GridSpec::new([4, 4, 1], [0.5, 0.5, 2.0], [0.0; 3]).unwrap(),
        GridSpec::cubic([3, 3, 3], 1.0).unwrap(),
        GridSpec::new([2, 3, 2], [1.0, 0.5, 2.0], [0.0; 3]).unwrap(),
    ]
}

#[test]
fn matrix_free_product_matches_dense_assembly() {
    let model = MaterialModel::default();
    let mut rng = rng(31);
    for (g, spec) in grids().into_iter().enumerate() {
        let rho = random_density(g as u64, spec);
        let k = dense_stiffness(&rho, &model);
        let n = Mesh::new(&spec).dof_count();
        for _ in 0..3 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = apply_stiffness(&rho, &u, &model).unwrap();
            let slow = mat_vec(&k, &u);
            let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-10 * scale, "grid {g}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn assembled_stiffness_is_symmetric_positive_semidefinite() {
    let model = MaterialModel::default();
    for (g, spec) in grids().into_iter().enumerate() {
        let k = dense_stiffness(&random_density(g as u64 + 10, spec), &model);
        let n = Mesh::new(&spec).dof_count();
        let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..n {
            assert!(k[r * n + r] > 0.0);
            for c in 0..r {
                assert!((k[r * n + c] - k[c * n + r]).abs() <= 1e-12 * scale);
            }
        }
    }
}

/// Rigid translations and infinitesimal rotations about the origin.
fn rigid_modes(mesh: &Mesh) -> Vec<Vec<f64>> {
    let nd = mesh.ndim();
    let mut modes = Vec::new();
    for a in 0..nd {
        let mut u = vec![0.0; mesh.dof_count()];
        for n in 0..mesh.node_count() {
            u[mesh.dof(n, a)] = 1.0;
        }
        modes.push(u);
    }
    let planes: &[(usize, usize)] = if nd == 2 { &[(0, 1)] } else { &[(0, 1), (1, 2), (2, 0)] };
    for &(a, b) in planes {
        let mut u = vec![0.0; mesh.dof_count()];
        for n in 0..mesh.node_count() {
            let p = mesh.node_position(n);
            u[mesh.dof(n, a)] = -p[b];
            u[mesh.dof(n, b)] = p[a];
        }
        modes.push(u);
    }
    modes
}

#[test]
fn rigid_body_motions_are_in_the_nullspace() {
    let model = MaterialModel::default();
    for (g, spec) in grids().into_iter().enumerate() {
        let rho = random_density(g as u64 + 20, spec);
        let mesh = Mesh::new(&spec);
        for u in rigid_modes(&mesh) {
            let ku = apply_stiffness(&rho, &u, &model).unwrap();
            let m = ku.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(m < 1e-12, "grid {g}: |K·u_rigid| = {m}");
        }
    }
}

#[test]
fn uniform_strain_energy_matches_continuum_value() {
    // bilinear elements reproduce linear displacement fields exactly, so
    // uᵀKu equals εᵀDε times the area (plane stress, unit thickness)
    let nu = 0.3;
    let model = MaterialModel {
        poisson_ratio: nu,
        ..MaterialModel::default()
    };
    let spec = GridSpec::planar(5, 3, 0.5).unwrap();
    let mesh = Mesh::new(&spec);
    let rho = ScalarField::constant(spec, 1.0);
    let (a, b, c, d) = (0.3, -0.2, 0.5, 0.1);
    let mut u = vec![0.0; mesh.dof_count()];
    for n in 0..mesh.node_count() {
        let p = mesh.node_position(n);
        u[mesh.dof(n, 0)] = a * p[0] + b * p[1];
        u[mesh.dof(n, 1)] = c * p[0] + d * p[1];
    }
    let ku = apply_stiffness(&rho, &u, &model).unwrap();
    let energy: f64 = u.iter().zip(&ku).map(|(x, y)| x * y).sum();
    let (exx, eyy, gxy) = (a, d, b + c);
    let s = 1.0 / (1.0 - nu * nu);
    let density = s * (exx * exx + 2.0 * nu * exx * eyy + eyy * eyy) + s * 0.5 * (1.0 - nu) * gxy * gxy;
    let area = 2.5 * 1.5;
    assert!((energy - density * area).abs() < 1e-12 * density * area);
}

#[test]
fn bar_chain_tip_displacement_is_fl_over_ea() {
    let model = MaterialModel {
        youngs_modulus: 2.5,
        poisson_ratio: 0.0,
        ..MaterialModel::default()
    };
    for &(n, h) in &[(2usize, 1.0), (6, 1.0), (10, 0.5)] {
        let spec = GridSpec::cubic([1, 1, n], h).unwrap();
        let mesh = Mesh::new(&spec);
        let length = n as f64 * h;
        let force = 3.0;
        let mut fixed = Vec::new();
        let mut loads = Vec::new();
        for node in 0..mesh.node_count() {
            let z = node / 4;
            if z == 0 {
                fixed.extend((0..3).map(|c| mesh.dof(node, c)));
            }
            if z == n {
                loads.push((mesh.dof(node, 2), force / 4.0));
            }
        }
        let load = LoadCase::new(&mesh, &fixed, &loads).unwrap();
        let sol = solve(&ScalarField::constant(spec, 1.0), &load, &model, 1e-14, 1000).unwrap();
        let expected = force * length / (model.youngs_modulus * h * h);
        for node in 0..mesh.node_count() {
            let z = (node / 4) as f64 * h;
            let uz = sol.displacements[mesh.dof(node, 2)];
            assert!((uz - expected * z / length).abs() <= 1e-9 * expected, "n = {n}: {uz}");
            for c in 0..2 {
                assert!(sol.displacements[mesh.dof(node, c)].abs() <= 1e-9 * expected);
            }
        }
        assert!((sol.compliance - force * expected).abs() <= 1e-9 * force * expected);
    }
}

fn cantilever(nx: usize, ny: usize) -> (GridSpec, LoadCase) {
    let spec = GridSpec::planar(nx, ny, 1.0).unwrap();
    let (x, y) = (nx as f64, ny as f64);
    let load = LoadCase::from_selections(
        &spec,
        &[(Aabb::new([0.0; 3], [0.0, y, 0.0]), [true, true, false])],
        &[(Aabb::new([x, 0.0, 0.0], [x, 0.0, 0.0]), [0.0, -1.0, 0.0])],
    )
    .unwrap();
    (spec, load)
}

#[test]
fn compliance_sensitivity_matches_central_differences() {
    let model = MaterialModel::default();
    let (spec, load) = cantilever(8, 4);
    let compliance = |rho: &ScalarField| solve(rho, &load, &model, 1e-13, 10_000).unwrap().compliance;
    let step = 1e-4;
    for state in 0..20 {
        let rho = random_density(100 + state, spec);
        let sol = solve(&rho, &load, &model, 1e-13, 10_000).unwrap();
        let s = compliance_sensitivity(&rho, &sol, &model).unwrap();
        for e in 0..spec.len() {
            let bump = |d: f64| {
                let mut v = rho.values().to_vec();
                v[e] += d;
                ScalarField::new(spec, v).unwrap()
            };
            let fd = (compliance(&bump(step)) - compliance(&bump(-step))) / (2.0 * step);
            let an = s.values()[e];
            assert!(an <= 0.0);
            assert!((an - fd).abs() <= 1e-3 * fd.abs(), "state {state}, element {e}: {an} vs {fd}");
        }
    }
}
