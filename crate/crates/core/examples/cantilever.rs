//! 64×32 cantilever with and without a machining accessibility constraint.
//!
//! ```text
//! cargo run --release -p mtopt --example cantilever -- [w_acc] [directions] [lambda] [retain|penalize] [--thresholded]
//! ```
//!
//! `directions` is `+x` (default) or `+-x`. `--thresholded` runs the
//! accessibility analysis on the thresholded density. Prints compliance,
//! volume and secluded fraction of the final binary design and an ASCII
//! rendering (`o` marks secluded voxels). Set `SHOW_HISTORY` to print every
//! tenth iteration.

use mtopt::accessibility::{access_check, AccessOptions, SegmentShape, ToolAssembly, ToolPart, ToolProfile, ToolSegment};
use mtopt::fea::{LoadCase, MaterialModel};
use mtopt::grid::GridSpec;
use mtopt::morphology::Orientation;
use mtopt::scene::{Aabb, Scene};
use mtopt::topopt::{run_to, AccessCoupling, AccessDensity, TOConfig, WeightSchedule};

fn main() -> mtopt::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let w: f64 = args.first().map_or(0.0, |s| s.parse().unwrap());
    let dirs = args.get(1).map_or("+x", String::as_str);
    let lambda: f64 = args.get(2).map_or(0.05, |s| s.parse().unwrap());
    let coupling = match args.get(3).map(String::as_str) {
        Some("penalize") => AccessCoupling::Penalize,
        _ => AccessCoupling::Retain,
    };
    let thresholded = args.iter().any(|a| a == "--thresholded");

    let (nx, ny) = (64, 32);
    let spec = GridSpec::planar(nx, ny, 1.0)?;
    let scene = Scene::full(spec);
    let load = LoadCase::from_selections(
        &spec,
        &[(Aabb::new([0.0; 3], [0.0, ny as f64, 0.0]), [true, true, false])],
        &[(
            Aabb::new([nx as f64, ny as f64 / 2.0, 0.0], [nx as f64, ny as f64 / 2.0, 0.0]),
            [0.0, -1.0, 0.0],
        )],
    )?;
    let profile = ToolProfile::new(vec![
        ToolSegment {
            part: ToolPart::Cutter,
            shape: SegmentShape::Cylinder { radius: 1.0 },
            length: 6.0,
        },
        ToolSegment {
            part: ToolPart::Holder,
            shape: SegmentShape::Box { half_width: 3.0 },
            length: 24.0,
        },
    ]);
    let mut orientations = vec![Orientation::from_direction(0, [1.0, 0.0, 0.0], true)?];
    if dirs == "+-x" {
        orientations.push(Orientation::from_direction(1, [-1.0, 0.0, 0.0], true)?);
    }
    let tool = ToolAssembly::from_profile(&profile, 1.0, true, 1, orientations)?;
    let tools = [tool];

    let mut cfg = TOConfig::new(0.5, &spec);
    cfg.w_acc = WeightSchedule::Constant(w);
    cfg.lambda = lambda;
    cfg.access_coupling = coupling;
    if thresholded {
        cfg.access_density = AccessDensity::Thresholded;
    }
    let t0 = std::time::Instant::now();
    let state = run_to(&scene, &tools, &load, &MaterialModel::default(), &cfg)?;
    let design = state.design(cfg.tau)?;
    let access = access_check(
        &design,
        &scene,
        &tools,
        &AccessOptions {
            lambda,
            ..AccessOptions::default()
        },
    )?;
    if std::env::var_os("SHOW_HISTORY").is_some() {
        for r in state.history.iter().step_by(10) {
            println!(
                "{:4} {:10.4} {:.4} {:?} {:.3} {:.3}",
                r.iteration, r.compliance, r.volume_fraction, r.secluded_fraction, r.w_acc, r.change
            );
        }
    }
    let last = state.history.last().unwrap();
    println!(
        "w={w} dirs={dirs} lambda={lambda} {coupling:?}: iters={} compliance={:.4} vf={:.4} design_vf={:.4} secluded={:.4} ({:.1}s)",
        state.iteration,
        last.compliance,
        last.volume_fraction,
        design.volume_integral() / scene.domain_volume(),
        access.secluded_fraction(),
        t0.elapsed().as_secs_f64()
    );
    for j in (0..ny).rev() {
        let row: String = (0..nx)
            .map(|i| {
                if access.masks.secluded.get([i, j, 0]) != 0.0 {
                    'o'
                } else if design.get([i, j, 0]) != 0.0 {
                    '#'
                } else {
                    '.'
                }
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
