//! JSON scene configuration.
//!
//! A config describes the grid, the design domain, fixtures and frozen
//! regions, the tools, the load case, the material and the optimizer
//! settings. Relative field-file paths are resolved against the config
//! file's directory. Omitted optional settings are filled in by
//! [`load_config`], and [`Problem::config`] holds the completed document.

use std::fs;
use std::path::{Path, PathBuf};

use mtopt::accessibility::{SegmentShape, ToolAssembly, ToolPart, ToolProfile, ToolSegment};
use mtopt::fea::{LoadCase, MaterialModel};
use mtopt::grid::io::read_field;
use mtopt::grid::{GridSpec, ScalarField};
use mtopt::morphology::Orientation;
use mtopt::scene::{Aabb, Scene};
use mtopt::topopt::{AccessCoupling, AccessDensity, FilterTarget, TOConfig, WeightSchedule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid `{key}`: {reason}")]
    Schema { key: String, reason: String },
    #[error("`{key}` refers to {path}, which cannot be loaded: {reason}")]
    Unresolved { key: String, path: PathBuf, reason: String },
    #[error("inconsistent configuration: {0}")]
    Invariant(String),
}

fn schema(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub grid: GridConfig,
    /// Box or field file; the whole grid when omitted. Fixture voxels are
    /// always removed from the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_domain: Option<Region>,
    #[serde(default)]
    pub fixtures: Vec<Region>,
    /// Boxes frozen solid during optimization.
    #[serde(default)]
    pub retained_regions: Vec<BoxConfig>,
    /// Boxes frozen empty during optimization.
    #[serde(default)]
    pub void_regions: Vec<BoxConfig>,
    pub tools: Vec<ToolConfig>,
    pub load: LoadConfig,
    #[serde(default)]
    pub material: MaterialConfig,
    pub to: ToConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `[nx, ny]` for planar problems or `[nx, ny, nz]`.
    pub dims: Vec<usize>,
    /// Voxel size, a number or one value per axis.
    pub spacing: Spacing,
    /// Center of voxel `(0, 0, 0)`. Defaults to half a voxel from the
    /// coordinate origin, so the grid covers `[0, n·h]` on each axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spacing {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Region {
    Box(BoxConfig),
    Field {
        field: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Segments stacked from the cutter tip along the tool axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<SegmentConfig>>,
    /// Holder indicator field file, used together with `cutter`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutter: Option<PathBuf>,
    /// Replaces the origin stored in the holder and cutter files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub sharp_point_stride: usize,
    pub orientations: Vec<OrientationConfig>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    /// `cutter` or `holder`.
    pub part: String,
    /// `cylinder` (with `radius`) or `box` (with `half_width`).
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum OrientationConfig {
    /// Tool axis pointing along the approach direction.
    Direction {
        direction: Vec<f64>,
    },
    AxisAngle {
        axis: Vec<f64>,
        angle: f64,
    },
    /// In-plane rotation in radians, planar grids only.
    Angle {
        angle: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    #[serde(default)]
    pub supports: Vec<SupportConfig>,
    #[serde(default)]
    pub forces: Vec<ForceConfig>,
}

/// Fixes the flagged axes of every mesh node inside the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    #[serde(default = "all_axes")]
    pub fix: [bool; 3],
}

fn all_axes() -> [bool; 3] {
    [true; 3]
}

/// Total force spread evenly over the mesh nodes inside the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub force: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub youngs_modulus: Option<f64>,
    pub poisson_ratio: Option<f64>,
    pub simp_exponent: Option<f64>,
    pub rho_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToConfig {
    pub volume_fraction: f64,
    pub w_acc: Option<WeightConfig>,
    /// `retain` or `penalize`.
    pub coupling: Option<String>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub beta: Option<f64>,
    pub filter_radius: Option<f64>,
    /// `objective` or `blended`.
    pub filter_target: Option<String>,
    /// `continuous` or `thresholded`.
    pub access_density: Option<String>,
    pub move_limit: Option<f64>,
    pub oc_damping: Option<f64>,
    pub delta: Option<f64>,
    pub max_iter: Option<usize>,
    pub secluded_tolerance: Option<f64>,
    pub imf_stride: Option<usize>,
    pub cg_tol: Option<f64>,
    pub cg_max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightConfig {
    Constant(f64),
    Adaptive { start: f64, end: f64, ramp_fraction: f64 },
}

/// Everything a command needs, built from a validated config.
#[derive(Debug, Clone)]
pub struct Problem {
    /// The config with every default written out.
    pub config: SceneConfig,
    pub spec: GridSpec,
    pub scene: Scene,
    pub tools: Vec<ToolAssembly>,
    pub tool_names: Vec<String>,
    pub load: LoadCase,
    pub material: MaterialModel,
    pub to: TOConfig,
    /// Field files the config references, with their SHA-256 digests.
    pub inputs: Vec<(PathBuf, String)>,
}

impl Problem {
    /// SHA-256 of the completed config in canonical JSON form.
    pub fn config_hash(&self) -> String {
        sha256_hex(serde_json::to_string(&self.config).expect("config serializes").as_bytes())
    }

    /// Whether the optimizer applies the accessibility constraint.
    pub fn constraint_active(&self) -> bool {
        match self.to.w_acc {
            WeightSchedule::Constant(w) => w > 0.0,
            WeightSchedule::Adaptive { .. } => true,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Read, validate and resolve a scene config.
pub fn load_config(path: impl AsRef<Path>) -> Result<Problem, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config: SceneConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    resolve(config, &base)
}

/// Validate and resolve an already parsed config; relative paths are taken
/// from `base`.
pub fn resolve(mut config: SceneConfig, base: &Path) -> Result<Problem, ConfigError> {
    let mut inputs = Vec::new();
    let spec = grid_spec(&mut config.grid)?;
    let planar = spec.is_planar();

    let mut load_mask = |key: String, file: &Path| -> Result<ScalarField, ConfigError> {
        let full = base.join(file);
        let unresolved = |reason: String| ConfigError::Unresolved {
            key: key.clone(),
            path: full.clone(),
            reason,
        };
        let bytes = fs::read(&full).map_err(|e| unresolved(e.to_string()))?;
        let f = read_field(&full).map_err(|e| unresolved(e.to_string()))?;
        inputs.push((full.clone(), sha256_hex(&bytes)));
        Ok(f)
    };

    let region = |key: &str, r: &Region, load: &mut dyn FnMut(String, &Path) -> Result<ScalarField, ConfigError>| {
        match r {
            Region::Box(b) => Ok(to_aabb(key, b, planar)?.mask(&spec)),
            Region::Field { field } => {
                let f = load(key.to_string(), field)?;
                if *f.spec() != spec {
                    return Err(schema(key, format!("field grid {:?} differs from the config grid {spec:?}", f.spec())));
                }
                if !f.is_binary() {
                    return Err(schema(key, "region fields must be binary"));
                }
                Ok(f)
            }
        }
    };

    let mut fixtures = ScalarField::zeros(spec);
    for (n, r) in config.fixtures.iter().enumerate() {
        let m = region(&format!("fixtures[{n}]"), r, &mut load_mask)?;
        fixtures = fixtures.or(&m).map_err(core_invariant)?;
    }
    let domain = match &config.design_domain {
        Some(r) => region("design_domain", r, &mut load_mask)?,
        None => ScalarField::constant(spec, 1.0),
    };
    let domain = domain.and_not(&fixtures).map_err(core_invariant)?;
    if domain.count_nonzero() == 0 {
        return Err(schema("design_domain", "no voxels left once fixtures are removed"));
    }
    let mut retained = ScalarField::zeros(spec);
    for (n, b) in config.retained_regions.iter().enumerate() {
        retained = retained.or(&to_aabb(&format!("retained_regions[{n}]"), b, planar)?.mask(&spec)).map_err(core_invariant)?;
    }
    let mut voids = ScalarField::zeros(spec);
    for (n, b) in config.void_regions.iter().enumerate() {
        voids = voids.or(&to_aabb(&format!("void_regions[{n}]"), b, planar)?.mask(&spec)).map_err(core_invariant)?;
    }
    let scene = Scene::new(domain, fixtures, retained, voids).map_err(core_invariant)?;

    if config.tools.is_empty() {
        return Err(schema("tools", "at least one tool is required"));
    }
    let mut tools = Vec::new();
    let mut tool_names = Vec::new();
    for (n, t) in config.tools.iter().enumerate() {
        let key = format!("tools[{n}]");
        tools.push(build_tool(&key, t, &spec, &mut load_mask)?);
        tool_names.push(t.name.clone().unwrap_or_else(|| format!("tool{n}")));
    }

    let load = build_load(&config.load, &spec)?;
    let material = resolve_material(&mut config.material)?;
    let to = resolve_to(&mut config.to, &spec, scene.domain_volume())?;

    Ok(Problem {
        config,
        spec,
        scene,
        tools,
        tool_names,
        load,
        material,
        to,
        inputs,
    })
}

fn core_invariant(e: mtopt::Error) -> ConfigError {
    ConfigError::Invariant(e.to_string())
}

fn grid_spec(g: &mut GridConfig) -> Result<GridSpec, ConfigError> {
    let dims: [usize; 3] = match *g.dims.as_slice() {
        [nx, ny] => [nx, ny, 1],
        [nx, ny, nz] => [nx, ny, nz],
        _ => return Err(schema("grid.dims", "expected 2 or 3 entries")),
    };
    if dims.contains(&0) {
        return Err(schema("grid.dims", "all dims must be >= 1"));
    }
    let planar = dims[2] == 1;
    let spacing = match &g.spacing {
        Spacing::Uniform(h) if planar => [*h, *h, 1.0],
        Spacing::Uniform(h) => [*h; 3],
        Spacing::PerAxis(v) => match *v.as_slice() {
            [sx, sy] if planar => [sx, sy, 1.0],
            [sx, sy, sz] => [sx, sy, sz],
            _ => return Err(schema("grid.spacing", "expected a number or one value per axis")),
        },
    };
    if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(schema("grid.spacing", format!("must be finite and > 0, got {spacing:?}")));
    }
    let origin = match &g.origin {
        None => [0.5 * spacing[0], 0.5 * spacing[1], if planar { 0.0 } else { 0.5 * spacing[2] }],
        Some(o) => vec3("grid.origin", o, planar)?,
    };
    g.dims = dims.to_vec();
    g.spacing = Spacing::PerAxis(spacing.to_vec());
    g.origin = Some(origin.to_vec());
    GridSpec::new(dims, spacing, origin).map_err(|e| schema("grid", e.to_string()))
}

/// Two components are accepted on planar grids, with `z = 0`.
fn vec3(key: &str, v: &[f64], planar: bool) -> Result<[f64; 3], ConfigError> {
    let out = match *v {
        [x, y] if planar => [x, y, 0.0],
        [x, y, z] => [x, y, z],
        _ => return Err(schema(key, format!("expected {} components", if planar { "2 or 3" } else { "3" }))),
    };
    if out.iter().any(|c| !c.is_finite()) {
        return Err(schema(key, "components must be finite"));
    }
    Ok(out)
}

fn to_aabb(key: &str, b: &BoxConfig, planar: bool) -> Result<Aabb, ConfigError> {
    let min = vec3(&format!("{key}.min"), &b.min, planar)?;
    let max = vec3(&format!("{key}.max"), &b.max, planar)?;
    if (0..3).any(|a| min[a] > max[a]) {
        return Err(schema(key, "min exceeds max"));
    }
    Ok(Aabb::new(min, max))
}

fn build_tool(
    key: &str,
    t: &ToolConfig,
    spec: &GridSpec,
    load: &mut dyn FnMut(String, &Path) -> Result<ScalarField, ConfigError>,
) -> Result<ToolAssembly, ConfigError> {
    let planar = spec.is_planar();
    if t.orientations.is_empty() {
        return Err(schema(format!("{key}.orientations"), "at least one orientation is required"));
    }
    if t.sharp_point_stride == 0 {
        return Err(schema(format!("{key}.sharp_point_stride"), "must be >= 1"));
    }
    let mut orientations = Vec::new();
    for (id, o) in t.orientations.iter().enumerate() {
        let okey = format!("{key}.orientations[{id}]");
        let r = match o {
            OrientationConfig::Direction { direction } => {
                Orientation::from_direction(id, vec3(&okey, direction, planar)?, planar)
            }
            OrientationConfig::AxisAngle { axis, angle } if !planar => {
                Orientation::from_axis_angle(id, vec3(&okey, axis, false)?, *angle)
            }
            OrientationConfig::AxisAngle { .. } => {
                return Err(schema(okey, "planar grids take `angle` or `direction` orientations"))
            }
            OrientationConfig::Angle { angle } if planar && angle.is_finite() => Ok(Orientation::planar(id, *angle)),
            OrientationConfig::Angle { .. } => {
                return Err(schema(okey, "a bare finite `angle` needs a planar grid; use `axis` and `angle` in 3D"))
            }
        };
        orientations.push(r.map_err(|e| schema(okey, e.to_string()))?);
    }

    let built = match (&t.profile, &t.holder, &t.cutter) {
        (Some(segments), None, None) => {
            if !spec.is_isotropic() {
                return Err(schema(key, "profile tools need isotropic grid spacing"));
            }
            let mut out = Vec::new();
            for (n, s) in segments.iter().enumerate() {
                out.push(segment(&format!("{key}.profile[{n}]"), s)?);
            }
            ToolAssembly::from_profile(&ToolProfile::new(out), spec.spacing()[0], planar, t.sharp_point_stride, orientations)
        }
        (None, Some(h), Some(c)) => {
            let holder = load(format!("{key}.holder"), h)?;
            let cutter = load(format!("{key}.cutter"), c)?;
            let mut local = *cutter.spec();
            if local != *holder.spec() {
                return Err(schema(key, "holder and cutter files must share one grid"));
            }
            if local.is_planar() != planar || !local.same_spacing(spec) {
                return Err(schema(key, "tool fields must match the grid's spacing and dimensionality"));
            }
            if let Some(o) = &t.origin {
                local = GridSpec::new(local.dims(), local.spacing(), vec3(&format!("{key}.origin"), o, planar)?)
                    .map_err(|e| schema(format!("{key}.origin"), e.to_string()))?;
            }
            let holder = ScalarField::new(local, holder.into_values()).map_err(core_invariant)?;
            let cutter = ScalarField::new(local, cutter.into_values()).map_err(core_invariant)?;
            ToolAssembly::with_default_sharp_points(holder, cutter, t.sharp_point_stride, orientations)
        }
        _ => return Err(schema(key, "give either `profile` or both `holder` and `cutter`")),
    };
    built.map_err(|e| schema(key, e.to_string()))
}

fn segment(key: &str, s: &SegmentConfig) -> Result<ToolSegment, ConfigError> {
    let part = match s.part.as_str() {
        "cutter" => ToolPart::Cutter,
        "holder" => ToolPart::Holder,
        other => return Err(schema(format!("{key}.part"), format!("expected `cutter` or `holder`, got `{other}`"))),
    };
    let shape = match (s.shape.as_str(), s.radius, s.half_width) {
        ("cylinder", Some(radius), None) => SegmentShape::Cylinder { radius },
        ("box", None, Some(half_width)) => SegmentShape::Box { half_width },
        ("cylinder", ..) => return Err(schema(key, "a cylinder segment takes `radius` only")),
        ("box", ..) => return Err(schema(key, "a box segment takes `half_width` only")),
        (other, ..) => return Err(schema(format!("{key}.shape"), format!("expected `cylinder` or `box`, got `{other}`"))),
    };
    if !(s.length > 0.0 && s.length.is_finite()) {
        return Err(schema(format!("{key}.length"), "must be > 0"));
    }
    Ok(ToolSegment {
        part,
        shape,
        length: s.length,
    })
}

fn build_load(l: &LoadConfig, spec: &GridSpec) -> Result<LoadCase, ConfigError> {
    let planar = spec.is_planar();
    let mut supports = Vec::new();
    for (n, s) in l.supports.iter().enumerate() {
        let key = format!("load.supports[{n}]");
        let b = to_aabb(&key, &BoxConfig { min: s.min.clone(), max: s.max.clone() }, planar)?;
        supports.push((b, s.fix));
    }
    let mut forces = Vec::new();
    for (n, f) in l.forces.iter().enumerate() {
        let key = format!("load.forces[{n}]");
        let b = to_aabb(&key, &BoxConfig { min: f.min.clone(), max: f.max.clone() }, planar)?;
        forces.push((b, vec3(&format!("{key}.force"), &f.force, planar)?));
    }
    if supports.is_empty() {
        return Err(schema("load.supports", "at least one support is required"));
    }
    LoadCase::from_selections(spec, &supports, &forces).map_err(|e| schema("load", e.to_string()))
}

fn resolve_material(m: &mut MaterialConfig) -> Result<MaterialModel, ConfigError> {
    let d = MaterialModel::default();
    let model = MaterialModel {
        youngs_modulus: *m.youngs_modulus.get_or_insert(d.youngs_modulus),
        poisson_ratio: *m.poisson_ratio.get_or_insert(d.poisson_ratio),
        simp_exponent: *m.simp_exponent.get_or_insert(d.simp_exponent),
        rho_min: *m.rho_min.get_or_insert(d.rho_min),
    };
    model.validate().map_err(|e| prefixed("material", e))?;
    Ok(model)
}

fn prefixed(section: &str, e: mtopt::Error) -> ConfigError {
    match e {
        mtopt::Error::Parameter { name, reason } => schema(format!("{section}.{name}"), reason),
        other => schema(section, other.to_string()),
    }
}

fn resolve_to(t: &mut ToConfig, spec: &GridSpec, domain_volume: f64) -> Result<TOConfig, ConfigError> {
    let mut c = TOConfig::new(t.volume_fraction, spec);
    fn fill<T: Copy>(slot: &mut Option<T>, target: &mut T) {
        match slot {
            Some(v) => *target = *v,
            None => *slot = Some(*target),
        }
    }
    c.w_acc = match t.w_acc.get_or_insert(WeightConfig::Constant(0.0)) {
        WeightConfig::Constant(w) => WeightSchedule::Constant(*w),
        WeightConfig::Adaptive {
            start,
            end,
            ramp_fraction,
        } => WeightSchedule::Adaptive {
            start: *start,
            end: *end,
            ramp_fraction: *ramp_fraction,
        },
    };
    c.access_coupling = match t.coupling.get_or_insert_with(|| "retain".into()).as_str() {
        "retain" => AccessCoupling::Retain,
        "penalize" => AccessCoupling::Penalize,
        other => return Err(schema("to.coupling", format!("expected `retain` or `penalize`, got `{other}`"))),
    };
    c.filter_target = match t.filter_target.get_or_insert_with(|| "objective".into()).as_str() {
        "objective" => FilterTarget::Objective,
        "blended" => FilterTarget::Blended,
        other => return Err(schema("to.filter_target", format!("expected `objective` or `blended`, got `{other}`"))),
    };
    c.access_density = match t.access_density.get_or_insert_with(|| "continuous".into()).as_str() {
        "continuous" => AccessDensity::Continuous,
        "thresholded" => AccessDensity::Thresholded,
        other => {
            return Err(schema(
                "to.access_density",
                format!("expected `continuous` or `thresholded`, got `{other}`"),
            ))
        }
    };
    fill(&mut t.lambda, &mut c.lambda);
    fill(&mut t.tau, &mut c.tau);
    fill(&mut t.beta, &mut c.beta);
    fill(&mut t.move_limit, &mut c.move_limit);
    fill(&mut t.oc_damping, &mut c.oc_damping);
    fill(&mut t.max_iter, &mut c.max_iter);
    fill(&mut t.secluded_tolerance, &mut c.secluded_tolerance);
    fill(&mut t.imf_stride, &mut c.imf_stride);
    fill(&mut t.cg_tol, &mut c.cg_tol);
    fill(&mut t.cg_max_iter, &mut c.cg_max_iter);
    let h = spec.spacing()[0];
    c.filter_radius = Some(*t.filter_radius.get_or_insert(1.5 * h));
    c.validate().map_err(|e| prefixed("to", e))?;
    if c.cg_tol.is_nan() || c.cg_tol <= 0.0 {
        return Err(schema("to.cg_tol", "must be > 0"));
    }
    if c.cg_max_iter == 0 {
        return Err(schema("to.cg_max_iter", "must be >= 1"));
    }
    let delta = *t.delta.get_or_insert(1e-3 * domain_volume);
    c.delta = Some(delta);
    if delta.is_nan() || delta < 0.0 {
        return Err(schema("to.delta", "must be >= 0"));
    }
    Ok(c)
}
