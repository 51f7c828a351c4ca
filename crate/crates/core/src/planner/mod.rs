//! Greedy machining process plans.
//!
//! Starting from the raw stock `Ω₀`, each step picks the oriented tool that
//! removes the most remaining negative space, until no tool removes
//! anything. Collisions are checked against the final part plus fixtures:
//! stock that has already been cut away cannot obstruct the tool, and stock
//! that has not is about to be cut by the same sweep.

use log::debug;
use rayon::prelude::*;

use crate::accessibility::{AccessResult, ToolAssembly};
use crate::grid::ScalarField;
use crate::morphology::{cobstacle_slice, free_translations, sweep_accessible, Orientation};
use crate::scene::Scene;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanOptions {
    /// Overlap volume a placement may have with the part and fixtures and
    /// still count as collision-free.
    pub collision_allowance: f64,
}

impl PlanOptions {
    /// Allowance matching an accessibility analysis, so that every voxel it
    /// reports accessible is reachable by some planned placement.
    pub fn matching(access: &AccessResult, lambda: f64) -> Self {
        PlanOptions {
            collision_allowance: lambda * access.normalizer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub tool_index: usize,
    pub orientation: Orientation,
    pub removed: ScalarField,
    pub removed_volume: f64,
    pub stock_after: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessPlan {
    pub steps: Vec<PlanStep>,
    /// Volume of negative space left in the stock after the last step.
    pub residual_volume: f64,
    /// Negative-space volume before machining.
    pub negative_volume: f64,
}

impl ProcessPlan {
    /// Residual negative space after each step, starting with the raw stock.
    pub fn residual_trace(&self) -> Vec<f64> {
        let mut r = self.negative_volume;
        let mut out = vec![r];
        for s in &self.steps {
            r -= s.removed_volume;
            out.push(r);
        }
        out
    }
}

/// Stock voxels outside `target` that the cutter at orientation `r` reaches
/// without colliding with `target ∪ fixtures`.
pub fn removable_region(
    stock: &ScalarField,
    target: &ScalarField,
    fixtures: &ScalarField,
    tool: &ToolAssembly,
    r: &Orientation,
    opts: &PlanOptions,
) -> Result<ScalarField> {
    stock.spec().ensure_matches(target.spec(), "stock vs target")?;
    stock.spec().ensure_matches(fixtures.spec(), "stock vs fixtures")?;
    if target.and_not(stock)?.count_nonzero() > 0 {
        return Err(Error::Invariant("target is not contained in the stock".into()));
    }
    let negative = stock.and_not(target)?;
    reach(&negative, target, fixtures, tool, r, opts)
}

fn reach(
    region: &ScalarField,
    target: &ScalarField,
    fixtures: &ScalarField,
    tool: &ToolAssembly,
    r: &Orientation,
    opts: &PlanOptions,
) -> Result<ScalarField> {
    if region.count_nonzero() == 0 {
        return Ok(ScalarField::zeros(*region.spec()));
    }
    let obstacle = target.or(fixtures)?;
    let g = cobstacle_slice(&obstacle, tool.assembly(), r)?;
    let free = free_translations(&g, opts.collision_allowance)?;
    sweep_accessible(&free, tool.cutter(), r, region)
}

/// Greedy plan for machining `design` out of the scene's design domain.
///
/// Each round evaluates every (tool, orientation) pair and applies the one
/// removing the most voxels, breaking ties by lowest tool index and then
/// lowest orientation position. Stops when no candidate removes anything.
pub fn greedy_plan(design: &ScalarField, scene: &Scene, tools: &[ToolAssembly], opts: &PlanOptions) -> Result<ProcessPlan> {
    if tools.is_empty() {
        return Err(Error::param("tools", "at least one tool is required"));
    }
    if !design.is_binary() {
        return Err(Error::Invariant("greedy_plan expects a binary design".into()));
    }
    let domain = scene.domain();
    let target = design.and(domain)?;
    let negative = domain.and_not(&target)?;
    let dv = domain.spec().voxel_volume();

    // reach of each candidate depends only on the final part, so compute once
    let candidates: Vec<(usize, Orientation)> = tools
        .iter()
        .enumerate()
        .flat_map(|(t, tool)| tool.orientations().iter().map(move |o| (t, *o)))
        .collect();
    let reaches: Vec<ScalarField> = candidates
        .par_iter()
        .map(|(t, o)| reach(&negative, &target, scene.fixtures(), &tools[*t], o, opts))
        .collect::<Result<_>>()?;

    let mut stock = domain.clone();
    let mut remaining = negative.clone();
    let mut steps = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for (c, reach) in reaches.iter().enumerate() {
            let n = reach
                .values()
                .iter()
                .zip(remaining.values())
                .filter(|(&a, &b)| a != 0.0 && b != 0.0)
                .count();
            if n > 0 && best.map_or(true, |(_, m)| n > m) {
                best = Some((c, n));
            }
        }
        let Some((c, _)) = best else { break };
        let removed = reaches[c].and(&remaining)?;
        stock = stock.and_not(&removed)?;
        remaining = remaining.and_not(&removed)?;
        let (tool_index, orientation) = candidates[c];
        let removed_volume = removed.count_nonzero() as f64 * dv;
        debug!(
            "plan step {}: tool {tool_index}, orientation {}, removed {removed_volume}",
            steps.len(),
            orientation.id
        );
        steps.push(PlanStep {
            tool_index,
            orientation,
            removed,
            removed_volume,
            stock_after: stock.clone(),
        });
    }
    Ok(ProcessPlan {
        steps,
        residual_volume: remaining.count_nonzero() as f64 * dv,
        negative_volume: negative.count_nonzero() as f64 * dv,
    })
}
