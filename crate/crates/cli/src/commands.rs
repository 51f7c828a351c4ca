//! The `analyze`, `optimize` and `plan` subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use mtopt::accessibility::{access_check, AccessOptions, AccessResult, ImfOptions};
use mtopt::grid::io::{read_field, write_field, Dtype};
use mtopt::grid::vtk::write_vtk;
use mtopt::grid::{threshold, ScalarField};
use mtopt::morphology::Rotation;
use mtopt::planner::{greedy_plan, PlanOptions};
use mtopt::topopt::{history_csv, run_to_with, TOConfig};
use serde_json::{json, Value};

use crate::config::{sha256_hex, Problem};

/// How a command finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Feasible,
    /// Completed, but the result fails the accessibility tolerance.
    Infeasible,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Feasible => 0,
            Outcome::Infeasible => 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub mem_budget_mb: Option<usize>,
    pub dump_intermediate: bool,
    /// `plan` only: write the stock after every step.
    pub snapshots: bool,
}

impl RunOptions {
    fn imf(&self) -> ImfOptions {
        ImfOptions {
            mem_budget_bytes: self.mem_budget_mb.map(|mb| mb.saturating_mul(1 << 20)),
        }
    }

    fn access(&self, to: &TOConfig, keep_per_tool: bool) -> AccessOptions {
        AccessOptions {
            lambda: to.lambda,
            tau: to.tau,
            imf: self.imf(),
            keep_per_tool,
        }
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        if self.dump_intermediate {
            fs::create_dir_all(self.out_dir.join("intermediate"))?;
        }
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Read a design on the config grid. Non-binary fields are thresholded at
/// `τ`.
pub fn read_design(problem: &Problem, path: &Path) -> Result<ScalarField> {
    let f = read_field(path).with_context(|| format!("cannot load design {}", path.display()))?;
    if *f.spec() != problem.spec {
        bail!("design grid {:?} differs from the config grid {:?}", f.spec(), problem.spec);
    }
    if f.is_binary() {
        return Ok(f);
    }
    info!("design is not binary; thresholding at tau = {}", problem.to.tau);
    Ok(threshold(&f, problem.to.tau)?)
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_masks(opts: &RunOptions, access: &AccessResult) -> Result<()> {
    write_field(&access.imf, opts.path("imf.voxfield"), Dtype::F64)?;
    write_field(&access.masks.accessible, opts.path("accessible.voxfield"), Dtype::U8)?;
    write_field(&access.masks.inaccessible, opts.path("inaccessible.voxfield"), Dtype::U8)?;
    write_field(&access.masks.secluded, opts.path("secluded.voxfield"), Dtype::U8)?;
    Ok(())
}

/// Summary of an access check, with per-tool coverage of the negative
/// space: the share that each tool reaches on its own.
fn access_summary(problem: &Problem, design: &ScalarField, access: &AccessResult) -> Result<Value> {
    let negative = problem.scene.domain().and_not(design)?;
    let negative_volume = negative.volume_integral();
    let dv = problem.spec.voxel_volume();
    let bound = problem.to.lambda * access.normalizer;
    let per_tool: Vec<Value> = match &access.per_tool_imf {
        Some(fields) => fields
            .iter()
            .enumerate()
            .map(|(t, f)| {
                let reached = negative
                    .values()
                    .iter()
                    .zip(f.values())
                    .filter(|(&n, &v)| n != 0.0 && v <= bound)
                    .count() as f64
                    * dv;
                json!({
                    "tool": t,
                    "name": problem.tool_names[t],
                    "orientations": problem.tools[t].orientations().len(),
                    "sharp_points": problem.tools[t].sharp_points().len(),
                    "accessible_negative_volume": reached,
                    "coverage": if negative_volume > 0.0 { reached / negative_volume } else { 1.0 },
                })
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(json!({
        "secluded_volume": access.secluded_volume,
        "secluded_fraction": access.secluded_fraction(),
        "domain_volume": access.domain_volume,
        "negative_volume": negative_volume,
        "tolerance": problem.to.secluded_tolerance,
        "feasible": access.passes(problem.to.secluded_tolerance),
        "lambda": problem.to.lambda,
        "normalizer": access.normalizer,
        "per_tool_stats": per_tool,
    }))
}

/// Accessibility check of a finished design. Prints a JSON summary to
/// stdout and writes the normalized IMF and region masks.
pub fn cmd_analyze(problem: &Problem, design_path: &Path, opts: &RunOptions) -> Result<Outcome> {
    opts.prepare()?;
    let design = read_design(problem, design_path)?;
    let access = access_check(&design, &problem.scene, &problem.tools, &opts.access(&problem.to, true))?;
    write_masks(opts, &access)?;
    write_vtk(
        opts.path("analysis.vtk"),
        &[
            ("design", &design),
            ("imf", &access.imf),
            ("secluded", &access.masks.secluded),
        ],
    )?;
    if opts.dump_intermediate {
        for (t, f) in access.per_tool_imf.iter().flatten().enumerate() {
            write_field(f, opts.path(&format!("intermediate/imf_raw_tool{t}.voxfield")), Dtype::F64)?;
        }
    }
    let summary = access_summary(problem, &design, &access)?;
    write_json(&opts.path("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if access.passes(problem.to.secluded_tolerance) {
        Outcome::Feasible
    } else {
        Outcome::Infeasible
    })
}

/// Run the optimizer and write the final density, the thresholded design,
/// the iteration history and a manifest. Infeasible when the constraint was
/// active and the final design still fails the tolerance.
pub fn cmd_optimize(problem: &Problem, opts: &RunOptions) -> Result<Outcome> {
    opts.prepare()?;
    let mut to = problem.to.clone();
    to.imf = opts.imf();
    let mut completed = 0;
    let mut dump_error = None;
    let state = run_to_with(
        &problem.scene,
        &problem.tools,
        &problem.load,
        &problem.material,
        &to,
        |state, record| {
            completed = record.iteration + 1;
            if opts.dump_intermediate && dump_error.is_none() {
                let path = opts.path(&format!("intermediate/rho_{:04}.voxfield", record.iteration));
                dump_error = write_field(&state.rho, path, Dtype::F64).err();
            }
        },
    )
    .with_context(|| format!("optimization failed at iteration {completed}"))?;
    if let Some(e) = dump_error {
        return Err(e.into());
    }

    let design = state.design(to.tau)?;
    write_field(&state.rho, opts.path("density.voxfield"), Dtype::F64)?;
    write_field(&design, opts.path("design.voxfield"), Dtype::U8)?;
    let csv = history_csv(&state.history);
    fs::write(opts.path("history.csv"), &csv)?;
    write_vtk(opts.path("result.vtk"), &[("density", &state.rho), ("design", &design)])?;

    let access = access_check(&design, &problem.scene, &problem.tools, &opts.access(&to, false))?;
    let last = state.history.last().expect("at least one iteration");
    let constrained = problem.constraint_active();
    let feasible = access.passes(to.secluded_tolerance);
    if constrained && !feasible {
        warn!(
            "final design leaves secluded fraction {:.4} above the tolerance {}",
            access.secluded_fraction(),
            to.secluded_tolerance
        );
    }

    let mut outputs = serde_json::Map::new();
    for name in ["density.voxfield", "design.voxfield", "history.csv"] {
        outputs.insert(name.into(), Value::String(sha256_hex(&fs::read(opts.path(name))?)));
    }
    let manifest = json!({
        "program": "mt",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "optimize",
        "config_hash": problem.config_hash(),
        "config": problem.config,
        "inputs": problem.inputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
        "iterations": state.iteration,
        "converged": state.converged,
        "final": {
            "compliance": last.compliance,
            "volume_fraction": last.volume_fraction,
            "design_volume_fraction": design.volume_integral() / problem.scene.domain_volume(),
            "secluded_fraction": access.secluded_fraction(),
            "constraint_active": constrained,
        },
        "outputs": outputs,
    });
    write_json(&opts.path("manifest.json"), &manifest)?;
    println!("{}", serde_json::to_string_pretty(&manifest["final"])?);
    Ok(if constrained && !feasible {
        Outcome::Infeasible
    } else {
        Outcome::Feasible
    })
}

/// Greedy process plan for a design. The collision allowance matches the
/// access check at the config's `λ`, so every voxel that check calls
/// accessible is planned for.
pub fn cmd_plan(problem: &Problem, design_path: &Path, opts: &RunOptions) -> Result<Outcome> {
    opts.prepare()?;
    let design = read_design(problem, design_path)?;
    let access = access_check(&design, &problem.scene, &problem.tools, &opts.access(&problem.to, false))?;
    let plan = greedy_plan(
        &design,
        &problem.scene,
        &problem.tools,
        &PlanOptions::matching(&access, problem.to.lambda),
    )?;
    let residuals = plan.residual_trace();
    let mut steps = Vec::new();
    for (n, step) in plan.steps.iter().enumerate() {
        let rotation = match step.orientation.rotation() {
            Rotation::Planar { angle } => json!({ "angle": angle }),
            Rotation::Spatial(q) => json!({ "quaternion": [q.w, q.i, q.j, q.k] }),
        };
        steps.push(json!({
            "step": n,
            "tool": step.tool_index,
            "tool_name": problem.tool_names[step.tool_index],
            "orientation": step.orientation.id,
            "rotation": rotation,
            "removed_volume": step.removed_volume,
            "residual_volume": residuals[n + 1],
        }));
        if opts.snapshots {
            write_field(&step.stock_after, opts.path(&format!("stock_{n:03}.voxfield")), Dtype::U8)?;
        }
        if opts.dump_intermediate {
            write_field(&step.removed, opts.path(&format!("intermediate/removed_{n:03}.voxfield")), Dtype::U8)?;
        }
    }
    let domain_volume = problem.scene.domain_volume();
    let limit = problem.to.secluded_tolerance * domain_volume;
    let feasible = plan.residual_volume <= limit;
    let doc = json!({
        "steps": steps,
        "negative_volume": plan.negative_volume,
        "residual_volume": plan.residual_volume,
        "residual_fraction": plan.residual_volume / domain_volume,
        "collision_allowance": problem.to.lambda * access.normalizer,
        "tolerance": problem.to.secluded_tolerance,
        "feasible": feasible,
    });
    write_json(&opts.path("plan.json"), &doc)?;
    println!(
        "{} steps, residual {} of {} negative volume",
        plan.steps.len(),
        plan.residual_volume,
        plan.negative_volume
    );
    if !feasible {
        warn!(
            "plan leaves {} volume unmachined, above the tolerance {limit}",
            plan.residual_volume
        );
        return Ok(Outcome::Infeasible);
    }
    Ok(Outcome::Feasible)
}
