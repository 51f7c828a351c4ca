//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! ```text
//! cargo test --release -p mtopt-cli --test acceptance
//! ```

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use mtopt::accessibility::{
    access_check, imf_single_tool, AccessOptions, ImfOptions, SegmentShape, ToolAssembly, ToolPart, ToolProfile,
    ToolSegment,
};
use mtopt::fea::{apply_stiffness, compliance_sensitivity, solve, LoadCase, MaterialModel, Mesh};
use mtopt::grid::{GridSpec, ScalarField};
use mtopt::morphology::{cobstacle_slice, convolve, Orientation};
use mtopt::planner::{greedy_plan, PlanOptions};
use mtopt::scene::Aabb;
use mtopt::topopt::{run_to, TOConfig, TOState, WeightSchedule};
use mtopt_cli::{load_config, Problem};
use mtopt_oracles::scenes::{self, endmill, l_tool, quarter_turns};
use mtopt_oracles::{
    dense_stiffness, direct_convolution, imf_exhaustive, lattice_key, mat_vec, minkowski_enumerated, random_field,
    random_indicator, rng,
};
use rand::seq::SliceRandom;
use rand::Rng;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = max_abs(b).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn c1_convolution_oracle() -> Verdict {
    let t0 = Instant::now();
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let planar = case % 4 == 0;
        let mut dims = |max: usize| -> [usize; 3] {
            let mut d = [0; 3].map(|_| rng.gen_range(1..=max));
            if planar {
                d[2] = 1;
            }
            d
        };
        let (da, db) = (dims(16), dims(5));
        let spacing = if planar { [1.0, 1.0, 1.0] } else { [0.5; 3] };
        let a = random_field(&mut rng, GridSpec::new(da, spacing, [0.0; 3]).unwrap());
        let b = random_field(&mut rng, GridSpec::new(db, spacing, [-1.0, 0.5, 0.0]).unwrap());
        let fast = convolve(&a, &b).unwrap();
        let slow = direct_convolution(&a, &b);
        if fast.spec() != slow.spec() {
            return Err(format!("case {case}: output grids differ"));
        }
        worst = worst.max(max_rel_err(fast.values(), slow.values()));
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && secs < 10.0,
        format!("50 pairs, max relative error {worst:.2e}, {secs:.2} s"),
    )
}

fn c2_minkowski_correspondence() -> Verdict {
    let mut rng = rng(102);
    let turns = quarter_turns(4);
    for scene in 0..20 {
        let ospec = GridSpec::planar(rng.gen_range(8..=32), rng.gen_range(8..=32), 1.0).unwrap();
        let obstacle = random_indicator(&mut rng, ospec, 0.15);
        let tspec = GridSpec::new([rng.gen_range(1..=5), rng.gen_range(1..=5), 1], [1.0; 3], [-1.0, -1.0, 0.0]).unwrap();
        let mut tool = random_indicator(&mut rng, tspec, 0.6);
        if tool.count_nonzero() == 0 {
            tool = ScalarField::constant(tspec, 1.0);
        }
        let r = &turns[scene % 4];
        let g = cobstacle_slice(&obstacle, &tool, r).unwrap();
        let expected = minkowski_enumerated(&obstacle, &tool, r);
        let gs = g.spec();
        let mut hits = 0;
        for idx in 0..gs.len() {
            let hit = expected.contains(&lattice_key(gs.center(gs.ijk(idx)), 1.0));
            if (g.values()[idx] > 0.0) != hit {
                return Err(format!("scene {scene}: mismatch at voxel {idx}"));
            }
            hits += hit as usize;
        }
        if hits != expected.len() {
            return Err(format!("scene {scene}: enumerated sum leaves the window"));
        }
    }
    Ok("20 scenes match voxel for voxel".into())
}

fn c3_imf_oracle() -> Verdict {
    let tools = [endmill(quarter_turns(4), 2), l_tool(quarter_turns(4)), endmill(quarter_turns(2), 3)];
    let mut worst = 0.0f64;
    for case in scenes::all() {
        for tool in &tools {
            if tool.orientations().len() > 4 || tool.sharp_points().len() > 8 {
                return Err("oracle tool exceeds 4 orientations or 8 sharp points".into());
            }
            let fast = imf_single_tool(&case.rho_o, tool, &ImfOptions::default()).unwrap();
            let slow = imf_exhaustive(&case.rho_o, tool);
            let scale = max_abs(slow.values()).max(1.0);
            let err = fast.values().iter().zip(slow.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
            worst = worst.max(err);
        }
    }
    let void = scenes::sealed_void();
    let access = access_check(&void.design, &void.scene(), &tools, &AccessOptions::default()).unwrap();
    let sealed = void.sealed.iter().all(|&v| access.masks.secluded.get(v) == 1.0);
    check(
        worst <= 1e-9 && sealed,
        format!("5 scenes x 3 tools, max relative error {worst:.2e}, sealed void in secluded set: {sealed}"),
    )
}

fn c4_refinement_monotonicity() -> Verdict {
    let mut rng = rng(104);
    let base = endmill(vec![Orientation::identity(0, true)], 1);
    let opts = ImfOptions::default();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let spec = GridSpec::planar(rng.gen_range(12..=24), rng.gen_range(10..=20), 1.0).unwrap();
        let rho = random_indicator(&mut rng, spec, 0.3);
        let theta: Vec<Orientation> = (0..6).map(|i| Orientation::planar(i, rng.gen_range(0.0..2.0 * PI))).collect();
        let coarse = base.with_orientations(theta[..2].to_vec()).unwrap();
        let fine = base.with_orientations(theta.clone()).unwrap();
        let mut k = fine.sharp_points().to_vec();
        k.shuffle(&mut rng);
        let few = fine.with_sharp_points(k[..2].to_vec()).unwrap();
        let fc = imf_single_tool(&rho, &coarse, &opts).unwrap();
        let ff = imf_single_tool(&rho, &fine, &opts).unwrap();
        let fk = imf_single_tool(&rho, &few, &opts).unwrap();
        for i in 0..spec.len() {
            worst = worst.max(ff.values()[i] - fc.values()[i]);
            worst = worst.max(ff.values()[i] - fk.values()[i]);
        }
    }
    check(
        worst <= 1e-9,
        format!("10 scenes, largest increase under refinement {worst:.2e}"),
    )
}

fn c5_fea() -> Verdict {
    let model = MaterialModel::default();
    let mut rng = rng(105);
    let mut detail = Vec::new();
    for spec in [GridSpec::planar(4, 4, 1.0).unwrap(), GridSpec::cubic([4, 4, 2], 1.0).unwrap()] {
        let rho = random_field(&mut rng, spec).map(|v| 0.1 + 0.9 * v).unwrap();
        let k = dense_stiffness(&rho, &model);
        let mesh = Mesh::new(&spec);
        let n = mesh.dof_count();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let err = max_rel_err(&apply_stiffness(&rho, &u, &model).unwrap(), &mat_vec(&k, &u));
        let scale = max_abs(&k);
        let asym = (0..n)
            .flat_map(|r| (0..r).map(move |c| (r, c)))
            .map(|(r, c)| (k[r * n + c] - k[c * n + r]).abs())
            .fold(0.0, f64::max)
            / scale;
        let mut rigid = 0.0f64;
        for a in 0..mesh.ndim() {
            let mut t = vec![0.0; n];
            for node in 0..mesh.node_count() {
                t[mesh.dof(node, a)] = 1.0;
            }
            rigid = rigid.max(max_abs(&apply_stiffness(&rho, &t, &model).unwrap()));
        }
        let mut rot = vec![0.0; n];
        for node in 0..mesh.node_count() {
            let p = mesh.node_position(node);
            rot[mesh.dof(node, 0)] = -p[1];
            rot[mesh.dof(node, 1)] = p[0];
        }
        rigid = rigid.max(max_abs(&apply_stiffness(&rho, &rot, &model).unwrap()));
        if !(err <= 1e-10 && asym <= 1e-12 && rigid <= 1e-12) {
            return Err(format!("{:?}: product error {err:.2e}, asymmetry {asym:.2e}, rigid residual {rigid:.2e}", spec.dims()));
        }
        detail.push(format!("{:?} product error {err:.1e}", spec.dims()));
    }

    // axial bar of hexahedra with ν = 0: tip displacement F·L/(E·A)
    let bar = MaterialModel {
        poisson_ratio: 0.0,
        ..model
    };
    let n = 8;
    let spec = GridSpec::cubic([1, 1, n], 1.0).unwrap();
    let mesh = Mesh::new(&spec);
    let mut fixed = Vec::new();
    let mut loads = Vec::new();
    for node in 0..mesh.node_count() {
        if node / 4 == 0 {
            fixed.extend((0..3).map(|c| mesh.dof(node, c)));
        }
        if node / 4 == n {
            loads.push((mesh.dof(node, 2), 0.25));
        }
    }
    let load = LoadCase::new(&mesh, &fixed, &loads).unwrap();
    let sol = solve(&ScalarField::constant(spec, 1.0), &load, &bar, 1e-14, 1000).unwrap();
    let expected = n as f64;
    let tip = sol.displacements[mesh.dof(mesh.node_count() - 1, 2)];
    let err = (tip - expected).abs() / expected;
    detail.push(format!("bar tip error {err:.1e}"));
    check(err <= 1e-9, detail.join(", "))
}

fn c6_sensitivity() -> Verdict {
    let model = MaterialModel::default();
    let spec = GridSpec::planar(8, 4, 1.0).unwrap();
    let load = LoadCase::from_selections(
        &spec,
        &[(Aabb::new([0.0; 3], [0.0, 4.0, 0.0]), [true, true, false])],
        &[(Aabb::new([8.0, 2.0, 0.0], [8.0, 2.0, 0.0]), [0.0, -1.0, 0.0])],
    )
    .unwrap();
    let c = |rho: &ScalarField| solve(rho, &load, &model, 1e-13, 10_000).unwrap();
    let mut rng = rng(106);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let rho = random_field(&mut rng, spec).map(|v| 0.1 + 0.9 * v).unwrap();
        let s = compliance_sensitivity(&rho, &c(&rho), &model).unwrap();
        for e in 0..spec.len() {
            let step = 1e-4;
            let bump = |d: f64| {
                let mut v = rho.values().to_vec();
                v[e] += d;
                ScalarField::new(spec, v).unwrap()
            };
            let fd = (c(&bump(step)).compliance - c(&bump(-step)).compliance) / (2.0 * step);
            worst = worst.max((s.values()[e] - fd).abs() / fd.abs());
        }
    }
    check(worst <= 1e-3, format!("20 states x 32 elements, max relative error {worst:.2e}"))
}

fn benchmark() -> Problem {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/cantilever-2d.json");
    load_config(path).unwrap()
}

struct Run {
    state: TOState,
    design: ScalarField,
    compliance: f64,
    secluded: f64,
    secs: f64,
}

fn optimize(p: &Problem, tools: &[ToolAssembly], w: f64) -> Run {
    let t0 = Instant::now();
    let mut cfg: TOConfig = p.to.clone();
    cfg.w_acc = WeightSchedule::Constant(w);
    let state = run_to(&p.scene, tools, &p.load, &p.material, &cfg).unwrap();
    let design = state.design(cfg.tau).unwrap();
    let compliance = solve(&state.rho, &p.load, &p.material, 1e-8, 20_000).unwrap().compliance;
    let secluded = secluded_fraction(p, tools, &design);
    Run {
        state,
        design,
        compliance,
        secluded,
        secs: t0.elapsed().as_secs_f64(),
    }
}

fn secluded_fraction(p: &Problem, tools: &[ToolAssembly], design: &ScalarField) -> f64 {
    let opts = AccessOptions {
        lambda: p.to.lambda,
        tau: p.to.tau,
        ..AccessOptions::default()
    };
    access_check(design, &p.scene, tools, &opts).unwrap().secluded_fraction()
}

struct Benchmark {
    problem: Problem,
    plus_x: Vec<ToolAssembly>,
    both_x: Vec<ToolAssembly>,
    unconstrained: Run,
    constrained: Run,
}

fn c7_benchmark(b: &Benchmark) -> Verdict {
    let (u, c) = (&b.unconstrained, &b.constrained);
    let ratio = c.compliance / u.compliance;
    let a_ok = u.secluded > 0.05;
    let b_ok = c.secluded <= 0.01 && ratio >= 1.0;
    check(
        a_ok && b_ok && u.secs + c.secs < 300.0,
        format!(
            "(a) {}: unconstrained secluded {:.4}; (b) {}: constrained secluded {:.4}, compliance ratio {ratio:.3}; {:.0} s",
            if a_ok { "pass" } else { "FAIL" },
            u.secluded,
            if b_ok { "pass" } else { "FAIL" },
            c.secluded,
            u.secs + c.secs
        ),
    )
}

fn c8_two_directions(b: &Benchmark) -> Verdict {
    let unc_one = b.unconstrained.secluded;
    let unc_two = secluded_fraction(&b.problem, &b.both_x, &b.unconstrained.design);
    let con_two = optimize(&b.problem, &b.both_x, 0.5);
    let pen_one = b.constrained.compliance / b.unconstrained.compliance;
    let pen_two = con_two.compliance / b.unconstrained.compliance;
    check(
        unc_two < unc_one && pen_two < pen_one,
        format!(
            "unconstrained secluded {unc_one:.4} -> {unc_two:.4}, compliance ratio {pen_one:.3} -> {pen_two:.3} (constrained secluded {:.4})",
            con_two.secluded
        ),
    )
}

fn c9_planner(b: &Benchmark) -> Verdict {
    let p = &b.problem;
    let design = &b.constrained.design;
    let opts = AccessOptions {
        lambda: p.to.lambda,
        tau: p.to.tau,
        ..AccessOptions::default()
    };
    let access = access_check(design, &p.scene, &b.plus_x, &opts).unwrap();
    let plan_opts = PlanOptions::matching(&access, p.to.lambda);
    let plan = greedy_plan(design, &p.scene, &b.plus_x, &plan_opts).unwrap();
    let again = greedy_plan(design, &p.scene, &b.plus_x, &plan_opts).unwrap();
    let residual = plan.residual_volume / p.scene.domain_volume();
    let positive = plan.steps.iter().all(|s| s.removed_volume > 0.0);
    check(
        residual <= 0.01 && plan == again && positive,
        format!(
            "{} steps, residual fraction {residual:.4}, deterministic {}, positive steps {positive}",
            plan.steps.len(),
            plan == again
        ),
    )
}

fn c10_scaling() -> Verdict {
    let profile = ToolProfile::new(vec![
        ToolSegment {
            part: ToolPart::Cutter,
            shape: SegmentShape::Cylinder { radius: 1.5 },
            length: 4.0,
        },
        ToolSegment {
            part: ToolPart::Holder,
            shape: SegmentShape::Box { half_width: 3.0 },
            length: 6.0,
        },
    ]);
    let orientations = vec![
        Orientation::from_direction(0, [0.0, 0.0, 1.0], false).unwrap(),
        Orientation::from_direction(1, [1.0, 0.0, 0.0], false).unwrap(),
        Orientation::from_direction(2, [0.0, -1.0, 0.0], false).unwrap(),
    ];
    let tool = ToolAssembly::from_profile(&profile, 1.0, false, 8, orientations).unwrap();
    let mut rng = rng(110);
    let mut points = Vec::new();
    for n in [32usize, 64, 96] {
        let spec = GridSpec::cubic([n; 3], 1.0).unwrap();
        let rho = random_indicator(&mut rng, spec, 0.3);
        let mut best = f64::INFINITY;
        for _ in 0..2 {
            let t0 = Instant::now();
            imf_single_tool(&rho, &tool, &ImfOptions::default()).unwrap();
            best = best.min(t0.elapsed().as_secs_f64());
        }
        points.push(((spec.len() as f64).ln(), best.ln(), best));
    }
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = num / den;
    let times: Vec<String> = points.iter().map(|p| format!("{:.2}", p.2)).collect();
    check(
        slope < 1.5,
        format!("{} sharp points x 3 orientations, times [{}] s, log-log slope {slope:.2}", tool.sharp_points().len(), times.join(", ")),
    )
}

fn c11_thread_determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("mt-acceptance-{}", std::process::id()));
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/determinism.json");
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let run = |n: usize| -> Result<Vec<u8>, String> {
        let out: PathBuf = dir.join(format!("t{n}"));
        let o = Command::new(env!("CARGO_BIN_EXE_mt"))
            .args(["optimize", config.to_str().unwrap(), "--threads", &n.to_string(), "--out-dir"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !matches!(o.status.code(), Some(0 | 2)) {
            return Err(String::from_utf8_lossy(&o.stderr).into_owned());
        }
        std::fs::read(out.join("history.csv")).map_err(|e| e.to_string())
    };
    let one = run(1)?;
    let many = run(threads)?;
    let _ = std::fs::remove_dir_all(&dir);
    let rows = one.iter().filter(|&&b| b == b'\n').count() - 1;
    check(one == many, format!("1 vs {threads} threads, {rows} iterations, histories identical: {}", one == many))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: &str, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let t0 = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {d} [{secs:.1} s]");
            }
        }
    };
    report("1", "convolution oracle", &mut c1_convolution_oracle);
    report("2", "Minkowski correspondence", &mut c2_minkowski_correspondence);
    report("3", "IMF oracle", &mut c3_imf_oracle);
    report("4", "refinement monotonicity", &mut c4_refinement_monotonicity);
    report("5", "FEA correctness", &mut c5_fea);
    report("6", "sensitivity check", &mut c6_sensitivity);

    let problem = benchmark();
    let plus_x = problem.tools.clone();
    let mut both_x = plus_x.clone();
    both_x[0] = plus_x[0]
        .with_orientations(vec![
            Orientation::from_direction(0, [1.0, 0.0, 0.0], true).unwrap(),
            Orientation::from_direction(1, [-1.0, 0.0, 0.0], true).unwrap(),
        ])
        .unwrap();
    let unconstrained = optimize(&problem, &plus_x, 0.0);
    let constrained = optimize(&problem, &plus_x, 0.5);
    let bench = Benchmark {
        problem,
        plus_x,
        both_x,
        unconstrained,
        constrained,
    };
    let iterations = (bench.unconstrained.state.iteration, bench.constrained.state.iteration);
    report("7", "cantilever benchmark", &mut || {
        c7_benchmark(&bench).map(|d| format!("{d}, iterations {iterations:?}")).map_err(|d| format!("{d}, iterations {iterations:?}"))
    });
    report("8", "two-direction relaxation", &mut || c8_two_directions(&bench));
    report("9", "planner guarantee", &mut || c9_planner(&bench));
    report("10", "IMF scaling", &mut c10_scaling);
    report("11", "thread determinism", &mut c11_thread_determinism);

    println!("{} of 11 criteria failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
