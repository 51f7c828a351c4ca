//! Accessibility-constrained SIMP topology optimization.
//!
//! Each iteration projects the design variables `ξ` to densities `ρ`,
//! solves the elasticity problem, normalizes the compliance sensitivity and,
//! when an accessibility weight is active, blends it with the accessibility
//! filter built from the IMF of the current density. An optimality-criteria
//! step with a bisected volume multiplier then updates `ξ`.

mod filter;

use std::fmt::Write as _;

use log::{debug, info};
use rayon::prelude::*;

pub use filter::ConeFilter;

use crate::accessibility::{analyze_density, AccessOptions, AccessResult, ImfOptions, ToolAssembly};
use crate::fea::{compliance_sensitivity, normalize_sensitivity, solve_with, CgOptions, LoadCase, MaterialModel};
use crate::grid::{threshold, GridSpec, ScalarField};
use crate::scene::Scene;
use crate::{Error, Result};

/// Lower bound on free design variables, so that material can regrow.
pub const XI_MIN: f64 = 1e-3;

/// How the accessibility filter enters the blended sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessCoupling {
    /// Secluded voxels and inaccessible design voxels are pushed toward
    /// material: `S = (1 − w)·S̄_φ − w·S̄_IMF`. Secluded pockets fill in.
    Retain,
    /// The filter is added as a removal signal: `S = (1 − w)·S̄_φ + w·S̄_IMF`.
    Penalize,
}

/// Which sensitivity the cone filter smooths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterTarget {
    /// The blended sensitivity, inside the OC step.
    Blended,
    /// Only the compliance sensitivity, before normalization and blending.
    /// The accessibility filter reaches the update unsmoothed.
    Objective,
}

/// Density the accessibility analysis sees during optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessDensity {
    /// The projected density `ρ`.
    Continuous,
    /// `ρ` thresholded at `τ`. Secluded voxels are still taken where `ρ ≤ τ`.
    Thresholded,
}

/// Accessibility weight over the course of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightSchedule {
    Constant(f64),
    /// Start at `start` and step linearly toward `end`, reaching it after
    /// `ramp_fraction · max_iter` raises. The weight only rises in
    /// iterations where the secluded fraction exceeds the tolerance.
    Adaptive { start: f64, end: f64, ramp_fraction: f64 },
}

impl WeightSchedule {
    pub fn initial(&self) -> f64 {
        match *self {
            WeightSchedule::Constant(w) => w,
            WeightSchedule::Adaptive { start, .. } => start,
        }
    }

    /// Weight for the next iteration.
    pub fn next(&self, current: f64, max_iter: usize, secluded_fraction: Option<f64>, tolerance: f64) -> f64 {
        match *self {
            WeightSchedule::Constant(w) => w,
            WeightSchedule::Adaptive {
                start,
                end,
                ramp_fraction,
            } => match secluded_fraction {
                Some(s) if s > tolerance => {
                    let steps = (ramp_fraction * max_iter as f64).max(1.0);
                    (current + (end - start) / steps).min(end)
                }
                _ => current,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |w: f64| (0.0..1.0).contains(&w);
        match *self {
            WeightSchedule::Constant(w) if !ok(w) => {
                Err(Error::param("w_acc", format!("must lie in [0, 1), got {w}")))
            }
            WeightSchedule::Adaptive {
                start,
                end,
                ramp_fraction,
            } if !(ok(start) && ok(end) && start <= end && ramp_fraction > 0.0 && ramp_fraction <= 1.0) => {
                Err(Error::param(
                    "w_acc",
                    format!("adaptive schedule needs 0 <= start <= end < 1 and ramp in (0, 1], got {start}, {end}, {ramp_fraction}"),
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TOConfig {
    pub volume_fraction: f64,
    pub w_acc: WeightSchedule,
    pub access_coupling: AccessCoupling,
    pub lambda: f64,
    pub tau: f64,
    pub beta: f64,
    /// Sensitivity filter radius in length units; `None` means 1.5 voxels.
    pub filter_radius: Option<f64>,
    pub filter_target: FilterTarget,
    pub access_density: AccessDensity,
    pub move_limit: f64,
    /// OC exponent `η`.
    pub oc_damping: f64,
    /// Stop when `dv·Σ|ξ_new − ξ|` drops below this; `None` means
    /// `10⁻³·vol(Ω₀)`.
    pub delta: Option<f64>,
    pub max_iter: usize,
    /// Admissible secluded volume as a fraction of `vol(Ω₀)`.
    pub secluded_tolerance: f64,
    /// Recompute the IMF every this many iterations.
    pub imf_stride: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub imf: ImfOptions,
}

impl TOConfig {
    /// Defaults for a grid: `β = 2` on planar grids and `8` otherwise.
    pub fn new(volume_fraction: f64, spec: &GridSpec) -> Self {
        TOConfig {
            volume_fraction,
            w_acc: WeightSchedule::Constant(0.0),
            access_coupling: AccessCoupling::Retain,
            lambda: crate::accessibility::DEFAULT_LAMBDA,
            tau: crate::accessibility::DEFAULT_TAU,
            beta: if spec.is_planar() { 2.0 } else { 8.0 },
            filter_radius: None,
            filter_target: FilterTarget::Objective,
            access_density: AccessDensity::Continuous,
            move_limit: 0.2,
            oc_damping: 0.5,
            delta: None,
            max_iter: 200,
            secluded_tolerance: 0.01,
            imf_stride: 1,
            cg_tol: 1e-6,
            cg_max_iter: 20_000,
            imf: ImfOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume_fraction > 0.0 && self.volume_fraction < 1.0) {
            return Err(Error::param("volume_fraction", format!("must lie in (0, 1), got {}", self.volume_fraction)));
        }
        self.w_acc.validate()?;
        if !(self.lambda >= 0.0 && self.lambda < 1.0) {
            return Err(Error::param("lambda", format!("must lie in [0, 1), got {}", self.lambda)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::param("tau", format!("must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("must be > 0, got {}", self.beta)));
        }
        if !(self.move_limit >= 0.0 && self.move_limit <= 1.0) {
            return Err(Error::param("move_limit", format!("must lie in [0, 1], got {}", self.move_limit)));
        }
        if !(self.oc_damping > 0.0 && self.oc_damping <= 1.0) {
            return Err(Error::param("oc_damping", format!("must lie in (0, 1], got {}", self.oc_damping)));
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0) {
                return Err(Error::param("delta", format!("must be >= 0, got {d}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be >= 1"));
        }
        if !(self.secluded_tolerance >= 0.0) {
            return Err(Error::param("secluded_tolerance", "must be >= 0"));
        }
        if self.imf_stride == 0 {
            return Err(Error::param("imf_stride", "must be >= 1"));
        }
        if let Some(r) = self.filter_radius {
            if !(r > 0.0) {
                return Err(Error::param("filter_radius", format!("must be > 0, got {r}")));
            }
        }
        Ok(())
    }
}

/// One row of the optimization history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub compliance: f64,
    pub volume_fraction: f64,
    /// `None` when no tools were supplied.
    pub secluded_fraction: Option<f64>,
    pub w_acc: f64,
    /// `dv·Σ|ξ_new − ξ|`.
    pub change: f64,
    pub cg_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TOState {
    pub xi: ScalarField,
    pub rho: ScalarField,
    pub iteration: usize,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

impl TOState {
    /// Binary design `ρ > τ`.
    pub fn design(&self, tau: f64) -> Result<ScalarField> {
        crate::grid::threshold(&self.rho, tau)
    }
}

/// Render a history as CSV. Floats use shortest round-trip formatting, so
/// identical runs give identical files.
pub fn history_csv(history: &[IterationRecord]) -> String {
    let mut s = String::from("iteration,compliance,volume_fraction,secluded_fraction,w_acc,change,cg_iterations\n");
    for r in history {
        let sec = r.secluded_fraction.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iteration, r.compliance, r.volume_fraction, sec, r.w_acc, r.change, r.cg_iterations
        );
    }
    s
}

/// `ρ = 1 − e^{−βξ} + ξ·e^{−β}`.
pub fn heaviside_project(xi: &ScalarField, beta: f64) -> Result<ScalarField> {
    if !(beta > 0.0) {
        return Err(Error::param("beta", format!("must be > 0, got {beta}")));
    }
    xi.map(|x| project(x, beta))
}

/// `dρ/dξ = β·e^{−βξ} + e^{−β}`.
pub fn heaviside_derivative(xi: &ScalarField, beta: f64) -> Result<ScalarField> {
    if !(beta > 0.0) {
        return Err(Error::param("beta", format!("must be > 0, got {beta}")));
    }
    xi.map(|x| beta * (-beta * x).exp() + (-beta).exp())
}

#[inline]
fn project(x: f64, beta: f64) -> f64 {
    (1.0 - (-beta * x).exp() + x * (-beta).exp()).clamp(0.0, 1.0)
}

/// Accessibility filter: `f̄` on design voxels (`ρ > τ`), 1 on secluded
/// voxels, 0 elsewhere.
pub fn build_access_filter(access: &AccessResult, rho: &ScalarField, tau: f64) -> Result<ScalarField> {
    rho.spec().ensure_matches(access.imf.spec(), "access filter")?;
    let imf = access.imf.values();
    let sec = access.masks.secluded.values();
    let values = rho
        .values()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if sec[i] != 0.0 {
                1.0
            } else if r > tau {
                imf[i]
            } else {
                0.0
            }
        })
        .collect();
    ScalarField::new(*rho.spec(), values)
}

/// `(1 − w)·S̄_φ + w·S̄_IMF`; `w = 0` returns `S̄_φ` unchanged.
pub fn blend_sensitivity(s_phi_norm: &ScalarField, s_imf: &ScalarField, w_acc: f64) -> Result<ScalarField> {
    if !(0.0..1.0).contains(&w_acc) {
        return Err(Error::param("w_acc", format!("must lie in [0, 1), got {w_acc}")));
    }
    s_phi_norm.spec().ensure_matches(s_imf.spec(), "blend_sensitivity")?;
    if w_acc == 0.0 {
        return Ok(s_phi_norm.clone());
    }
    s_phi_norm.zip_with(s_imf, |a, b| (1.0 - w_acc) * a + w_acc * b)
}

/// Voxels whose design variable the optimizer may change.
fn free_mask(scene: &Scene) -> Vec<bool> {
    let d = scene.domain().values();
    let r = scene.retained().values();
    let v = scene.voids().values();
    (0..d.len()).map(|i| d[i] != 0.0 && r[i] == 0.0 && v[i] == 0.0).collect()
}

/// Design variables with frozen regions imposed: retained voxels at 1,
/// void voxels and voxels outside the domain at 0.
fn impose_frozen(xi: &mut [f64], scene: &Scene) {
    let d = scene.domain().values();
    let r = scene.retained().values();
    let v = scene.voids().values();
    for i in 0..xi.len() {
        if d[i] == 0.0 || v[i] != 0.0 {
            xi[i] = 0.0;
        } else if r[i] != 0.0 {
            xi[i] = 1.0;
        }
    }
}

/// OC candidate for a fixed multiplier:
/// `clamp(ξ·(max(−S, 0)/Λ)^η, ξ ± m, [ξ_min, 1])` on free voxels. Voxels
/// with `S ≥ 0` take the lower move bound.
pub fn oc_candidate(xi: &[f64], s: &[f64], free: &[bool], multiplier: f64, cfg: &TOConfig) -> Vec<f64> {
    let m = cfg.move_limit;
    let eta = cfg.oc_damping;
    xi.par_iter()
        .zip(s.par_iter())
        .zip(free.par_iter())
        .map(|((&x, &si), &f)| {
            if !f {
                return x;
            }
            let b = (-si).max(0.0) / multiplier;
            let lo = (x - m).max(XI_MIN);
            let hi = (x + m).min(1.0);
            (x * b.powf(eta)).clamp(lo.min(hi), hi)
        })
        .collect()
}

/// Optimality-criteria update.
///
/// With [`FilterTarget::Blended`] `s` is first smoothed by the cone filter.
/// The multiplier is bisected in log space until the projected volume
/// matches the target within `10⁻⁴` relative. When the move limit makes the target unreachable the step
/// that gets closest is returned.
pub fn oc_update(xi: &ScalarField, s: &ScalarField, scene: &Scene, cfg: &TOConfig) -> Result<ScalarField> {
    cfg.validate()?;
    let spec = *xi.spec();
    spec.ensure_matches(s.spec(), "oc_update")?;
    spec.ensure_matches(scene.spec(), "oc_update scene")?;
    let sf = match cfg.filter_target {
        FilterTarget::Blended => {
            let h = spec.spacing()[0];
            ConeFilter::new(cfg.filter_radius.unwrap_or(1.5 * h), h, spec.is_planar())?.apply(s, xi)?
        }
        FilterTarget::Objective => s.clone(),
    };
    let free = free_mask(scene);
    let dv = spec.voxel_volume();
    let target = cfg.volume_fraction * scene.domain_volume();
    let volume = |x: &[f64]| -> f64 { x.iter().map(|&v| project(v, cfg.beta)).sum::<f64>() * dv };

    let candidate = |lm: f64| oc_candidate(xi.values(), sf.values(), &free, lm, cfg);
    let (mut lo, mut hi) = (-40.0f64, 40.0f64); // log10 of the multiplier
    let v_lo = volume(&candidate(10f64.powf(lo)));
    let v_hi = volume(&candidate(10f64.powf(hi)));
    if v_lo <= target {
        return ScalarField::new(spec, candidate(10f64.powf(lo)));
    }
    if v_hi >= target {
        return ScalarField::new(spec, candidate(10f64.powf(hi)));
    }
    let mut best = None;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let x = candidate(10f64.powf(mid));
        let v = volume(&x);
        if (v - target).abs() <= 1e-4 * target {
            best = Some(x);
            break;
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    match best {
        Some(x) => ScalarField::new(spec, x),
        None => {
            let x = candidate(10f64.powf(0.5 * (lo + hi)));
            Err(Error::Bisection {
                iterations: 100,
                volume: volume(&x),
                target,
            })
        }
    }
}

/// Run the optimization loop; see [`run_to_with`].
pub fn run_to(
    scene: &Scene,
    tools: &[ToolAssembly],
    load: &LoadCase,
    model: &MaterialModel,
    cfg: &TOConfig,
) -> Result<TOState> {
    run_to_with(scene, tools, load, model, cfg, |_, _| {})
}

/// Run the optimization loop, calling `observer` after every iteration.
///
/// Starts from `ξ = V_target / vol(Ω₀)` and stops when the change
/// `dv·Σ|Δξ|` falls below `δ` or after `max_iter` iterations. Tools are
/// used for the accessibility filter and for the secluded fraction in the
/// history; with no tools the run is plain SIMP.
pub fn run_to_with(
    scene: &Scene,
    tools: &[ToolAssembly],
    load: &LoadCase,
    model: &MaterialModel,
    cfg: &TOConfig,
    mut observer: impl FnMut(&TOState, &IterationRecord),
) -> Result<TOState> {
    cfg.validate()?;
    model.validate()?;
    let spec = *scene.spec();
    let domain_volume = scene.domain_volume();
    let delta = cfg.delta.unwrap_or(1e-3 * domain_volume);
    let uses_access = match cfg.w_acc {
        WeightSchedule::Constant(w) => w > 0.0,
        WeightSchedule::Adaptive { .. } => true,
    };
    if uses_access && tools.is_empty() {
        return Err(Error::param("tools", "an accessibility weight needs at least one tool"));
    }
    let access_opts = AccessOptions {
        lambda: cfg.lambda,
        tau: cfg.tau,
        imf: cfg.imf,
        keep_per_tool: false,
    };
    let cg = CgOptions {
        tol: cfg.cg_tol,
        max_iter: cfg.cg_max_iter,
    };

    let h = spec.spacing()[0];
    let objective_filter = ConeFilter::new(cfg.filter_radius.unwrap_or(1.5 * h), h, spec.is_planar())?;

    let mut xi0 = vec![(cfg.volume_fraction).clamp(XI_MIN, 1.0); spec.len()];
    impose_frozen(&mut xi0, scene);
    let xi = ScalarField::new(spec, xi0)?;
    let rho = heaviside_project(&xi, cfg.beta)?;
    let mut state = TOState {
        xi,
        rho,
        iteration: 0,
        history: Vec::new(),
        converged: false,
    };
    let mut w = cfg.w_acc.initial();
    let mut u_prev: Option<Vec<f64>> = None;
    let mut access: Option<AccessResult> = None;

    while state.iteration < cfg.max_iter {
        let it = state.iteration;
        let rho = heaviside_project(&state.xi, cfg.beta)?;
        let sol = solve_with(&rho, load, model, &cg, u_prev.as_deref())?;
        let s_rho = compliance_sensitivity(&rho, &sol, model)?;
        let s_xi = s_rho.zip_with(&heaviside_derivative(&state.xi, cfg.beta)?, |a, b| a * b)?;
        let s_phi = match cfg.filter_target {
            FilterTarget::Blended => normalize_sensitivity(&s_xi),
            FilterTarget::Objective => normalize_sensitivity(&objective_filter.apply(&s_xi, &state.xi)?),
        };

        if !tools.is_empty() && (access.is_none() || it % cfg.imf_stride == 0) {
            access = Some(match cfg.access_density {
                AccessDensity::Continuous => analyze_density(&rho, scene, tools, &access_opts)?,
                AccessDensity::Thresholded => {
                    let mut a = analyze_density(&threshold(&rho, cfg.tau)?, scene, tools, &access_opts)?;
                    let tau = cfg.tau;
                    a.masks.secluded = a
                        .masks
                        .inaccessible
                        .zip_with(&rho, |b, r| if b != 0.0 && r <= tau { 1.0 } else { 0.0 })?;
                    a.secluded_volume = a.masks.secluded.volume_integral();
                    a
                }
            });
        }
        let secluded = access.as_ref().map(|a| a.secluded_fraction());

        let s = if w > 0.0 {
            let filter = build_access_filter(access.as_ref().expect("computed above"), &rho, cfg.tau)?;
            let signed = match cfg.access_coupling {
                AccessCoupling::Retain => filter.map(|v| -v)?,
                AccessCoupling::Penalize => filter,
            };
            blend_sensitivity(&s_phi, &signed, w)?
        } else {
            s_phi
        };
        if s.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: it });
        }
        let xi_new = oc_update(&state.xi, &s, scene, cfg).map_err(|e| match e {
            Error::Parameter { .. } => Error::NonFinite { iteration: it },
            other => other,
        })?;
        let change = spec.voxel_volume()
            * xi_new
                .values()
                .iter()
                .zip(state.xi.values())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        let rho_new = heaviside_project(&xi_new, cfg.beta)?;
        let record = IterationRecord {
            iteration: it,
            compliance: sol.compliance,
            volume_fraction: rho_new.volume_integral() / domain_volume,
            secluded_fraction: secluded,
            w_acc: w,
            change,
            cg_iterations: sol.cg_iterations,
        };
        debug!(
            "iter {it}: compliance {:.6e}, vf {:.4}, secluded {:?}, w {:.3}, change {:.3e}, cg {}",
            record.compliance, record.volume_fraction, secluded, w, change, sol.cg_iterations
        );
        state.xi = xi_new;
        state.rho = rho_new;
        state.iteration += 1;
        state.history.push(record);
        u_prev = Some(sol.displacements);
        observer(&state, &record);
        w = cfg.w_acc.next(w, cfg.max_iter, secluded, cfg.secluded_tolerance);
        if change < delta {
            state.converged = true;
            break;
        }
    }
    info!(
        "optimization finished after {} iterations (converged: {})",
        state.iteration, state.converged
    );
    Ok(state)
}
