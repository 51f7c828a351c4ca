//! The static part of a problem: design domain, fixtures and frozen regions.

use crate::grid::{indicator, GridSpec, ScalarField};
use crate::{Error, Result};

/// Axis-aligned box in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Aabb { min, max }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Indicator of the voxels whose centers lie inside the box. On planar
    /// grids the `z` extent is ignored.
    pub fn mask(&self, spec: &GridSpec) -> ScalarField {
        let planar = spec.is_planar();
        let values = (0..spec.len())
            .map(|idx| {
                let p = spec.center(spec.ijk(idx));
                indicator((0..if planar { 2 } else { 3 }).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a]))
            })
            .collect();
        ScalarField::new(*spec, values).expect("indicator values are finite")
    }
}

/// Design domain `Ω₀`, fixtures `F` and regions frozen solid or void during
/// optimization. All masks are binary and share one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    domain: ScalarField,
    fixtures: ScalarField,
    retained: ScalarField,
    voids: ScalarField,
}

impl Scene {
    pub fn new(
        domain: ScalarField,
        fixtures: ScalarField,
        retained: ScalarField,
        voids: ScalarField,
    ) -> Result<Self> {
        let spec = *domain.spec();
        for (name, f) in [("domain", &domain), ("fixtures", &fixtures), ("retained", &retained), ("voids", &voids)] {
            spec.ensure_matches(f.spec(), name)?;
            if !f.is_binary() {
                return Err(Error::Invariant(format!("{name} mask must be binary")));
            }
        }
        if domain.count_nonzero() == 0 {
            return Err(Error::Invariant("design domain is empty".into()));
        }
        if domain.and(&fixtures)?.count_nonzero() > 0 {
            return Err(Error::Invariant("fixtures overlap the design domain".into()));
        }
        if retained.and(&voids)?.count_nonzero() > 0 {
            return Err(Error::Invariant("retained and void regions overlap".into()));
        }
        // frozen regions only make sense inside the domain
        let retained = retained.and(&domain)?;
        let voids = voids.and(&domain)?;
        Ok(Scene {
            domain,
            fixtures,
            retained,
            voids,
        })
    }

    /// Whole grid as design domain, nothing fixed or frozen.
    pub fn full(spec: GridSpec) -> Self {
        let zeros = ScalarField::zeros(spec);
        Scene {
            domain: ScalarField::constant(spec, 1.0),
            fixtures: zeros.clone(),
            retained: zeros.clone(),
            voids: zeros,
        }
    }

    pub fn with_fixtures(self, fixtures: ScalarField) -> Result<Self> {
        Scene::new(self.domain, fixtures, self.retained, self.voids)
    }

    pub fn spec(&self) -> &GridSpec {
        self.domain.spec()
    }

    pub fn domain(&self) -> &ScalarField {
        &self.domain
    }

    pub fn fixtures(&self) -> &ScalarField {
        &self.fixtures
    }

    pub fn retained(&self) -> &ScalarField {
        &self.retained
    }

    pub fn voids(&self) -> &ScalarField {
        &self.voids
    }

    pub fn domain_volume(&self) -> f64 {
        self.domain.volume_integral()
    }
}
