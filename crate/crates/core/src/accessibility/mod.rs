//! Inaccessibility measure fields and the accessible / inaccessible /
//! secluded decomposition of a design domain.
//!
//! For an obstacle density `ρ_O` (design plus fixtures) the IMF at a point is
//! the smallest collision volume any allowed tool configuration incurs while
//! touching that point with a sharp point of its cutter. After normalizing by
//! its maximum over the domain, voxels above the allowance `λ` are
//! inaccessible; inaccessible voxels that are not part of the design are
//! secluded, meaning no tool can remove them from the raw stock.

mod imf;
mod tool;

pub use imf::{imf_multi_tool, imf_per_tool, imf_single_tool, ImfOptions};
pub use tool::{default_sharp_points, SegmentShape, ToolAssembly, ToolPart, ToolProfile, ToolSegment};

use crate::grid::{implicit_union, indicator, RegionMasks, ScalarField};
use crate::scene::Scene;
use crate::{Error, Result};

/// Allowance and threshold defaults.
pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const DEFAULT_TAU: f64 = 0.5;

/// Normalized IMF together with the region decomposition it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessResult {
    /// `f̄ ∈ [0, 1]` on the domain, zero wherever `f̄ ≤ λ` and outside the
    /// domain.
    pub imf: ScalarField,
    pub masks: RegionMasks,
    pub secluded_volume: f64,
    pub domain_volume: f64,
    /// The maximum the raw field was divided by (0 when the raw field is 0).
    pub normalizer: f64,
    /// Unnormalized single-tool fields, when requested.
    pub per_tool_imf: Option<Vec<ScalarField>>,
}

impl AccessResult {
    /// `V_Γ / V_Ω₀`.
    pub fn secluded_fraction(&self) -> f64 {
        self.secluded_volume / self.domain_volume
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.secluded_fraction() <= tolerance
    }
}

/// Normalize a raw IMF by its maximum over the domain and split the domain.
///
/// `B = {f̄ > λ}` within `Ω₀`, `A = Ω₀ − B` and `Γ = B ∩ {ρ_Ω ≤ τ}`. Values
/// with `f̄ ≤ λ` are set to zero. A raw field that vanishes on the domain
/// normalizes to zero everywhere.
pub fn normalize_and_classify(
    f_imf: &ScalarField,
    rho_omega: &ScalarField,
    scene: &Scene,
    lambda: f64,
    tau: f64,
) -> Result<AccessResult> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::param("lambda", format!("allowance must lie in [0, 1), got {lambda}")));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::param("tau", format!("threshold must lie in (0, 1), got {tau}")));
    }
    let spec = scene.spec();
    spec.ensure_matches(f_imf.spec(), "imf vs scene")?;
    spec.ensure_matches(rho_omega.spec(), "density vs scene")?;
    let d = scene.domain().values();
    let f = f_imf.values();
    let rho = rho_omega.values();
    let normalizer = f
        .iter()
        .zip(d)
        .filter(|(_, &m)| m != 0.0)
        .fold(0.0f64, |m, (&v, _)| m.max(v));

    let n = spec.len();
    let mut imf = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut g = vec![0.0; n];
    for i in 0..n {
        if d[i] == 0.0 {
            continue;
        }
        let fb = if normalizer > 0.0 { (f[i] / normalizer).clamp(0.0, 1.0) } else { 0.0 };
        if fb > lambda {
            imf[i] = fb;
            b[i] = 1.0;
            g[i] = indicator(rho[i] <= tau);
        } else {
            a[i] = 1.0;
        }
    }
    let secluded = ScalarField::new(*spec, g)?;
    let secluded_volume = secluded.volume_integral();
    Ok(AccessResult {
        imf: ScalarField::new(*spec, imf)?,
        masks: RegionMasks {
            accessible: ScalarField::new(*spec, a)?,
            inaccessible: ScalarField::new(*spec, b)?,
            secluded,
        },
        secluded_volume,
        domain_volume: scene.domain_volume(),
        normalizer,
        per_tool_imf: None,
    })
}

/// Parameters of a manufacturability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessOptions {
    pub lambda: f64,
    pub tau: f64,
    pub imf: ImfOptions,
    pub keep_per_tool: bool,
}

impl Default for AccessOptions {
    fn default() -> Self {
        AccessOptions {
            lambda: DEFAULT_LAMBDA,
            tau: DEFAULT_TAU,
            imf: ImfOptions::default(),
            keep_per_tool: false,
        }
    }
}

/// Analyze a density (or binary design) against the scene's fixtures and a
/// tool set. `ρ_O` is the implicit union of `rho` and the fixtures.
pub fn analyze_density(
    rho: &ScalarField,
    scene: &Scene,
    tools: &[ToolAssembly],
    opts: &AccessOptions,
) -> Result<AccessResult> {
    let rho_o = implicit_union(rho, scene.fixtures())?;
    let (per_tool, f) = imf_per_tool(&rho_o, tools, &opts.imf)?;
    let mut res = normalize_and_classify(&f, rho, scene, opts.lambda, opts.tau)?;
    if opts.keep_per_tool {
        res.per_tool_imf = Some(per_tool);
    }
    Ok(res)
}

/// Manufacturability verdict for a finished binary design.
pub fn access_check(
    design: &ScalarField,
    scene: &Scene,
    tools: &[ToolAssembly],
    opts: &AccessOptions,
) -> Result<AccessResult> {
    if !design.is_binary() {
        return Err(Error::Invariant("access_check expects a binary design".into()));
    }
    analyze_density(design, scene, tools, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::morphology::Orientation;

    fn point_tool() -> ToolAssembly {
        let spec = GridSpec::new([1, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
        ToolAssembly::new(
            ScalarField::zeros(spec),
            ScalarField::constant(spec, 1.0),
            vec![[0, 0, 0]],
            vec![Orientation::identity(0, true)],
        )
        .unwrap()
    }

    #[test]
    fn point_tool_measures_self_overlap() {
        let spec = GridSpec::planar(6, 5, 1.0).unwrap();
        let rho = ScalarField::from_fn(spec, |[i, j, _]| ((i + 2 * j) % 5) as f64 / 4.0).unwrap();
        let f = imf_single_tool(&rho, &point_tool(), &ImfOptions::default()).unwrap();
        for (a, b) in f.values().iter().zip(rho.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_obstacle_has_zero_imf_and_full_access() {
        let spec = GridSpec::planar(8, 8, 1.0).unwrap();
        let scene = Scene::full(spec);
        let rho = ScalarField::zeros(spec);
        let res = analyze_density(&rho, &scene, &[point_tool()], &AccessOptions::default()).unwrap();
        assert!(res.imf.values().iter().all(|&v| v == 0.0));
        assert_eq!(res.masks.accessible, *scene.domain());
        assert_eq!(res.secluded_volume, 0.0);
        res.masks.check(scene.domain(), &rho).unwrap();
    }

    #[test]
    fn classification_is_scale_invariant() {
        let spec = GridSpec::planar(5, 4, 1.0).unwrap();
        let scene = Scene::full(spec);
        let f = ScalarField::from_fn(spec, |[i, j, _]| (i * j) as f64).unwrap();
        let rho = ScalarField::from_fn(spec, |[i, _, _]| if i > 2 { 1.0 } else { 0.0 }).unwrap();
        let a = normalize_and_classify(&f, &rho, &scene, 0.1, 0.5).unwrap();
        let b = normalize_and_classify(&f.map(|v| v * 37.5).unwrap(), &rho, &scene, 0.1, 0.5).unwrap();
        assert_eq!(a.masks, b.masks);
        for (x, y) in a.imf.values().iter().zip(b.imf.values()) {
            assert!((x - y).abs() < 1e-15);
        }
        a.masks.check(scene.domain(), &rho).unwrap();
    }

    #[test]
    fn empty_tool_list_is_rejected() {
        let spec = GridSpec::planar(2, 2, 1.0).unwrap();
        let rho = ScalarField::zeros(spec);
        assert!(imf_multi_tool(&rho, &[], &ImfOptions::default()).is_err());
    }
}
