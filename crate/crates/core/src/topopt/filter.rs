use rayon::prelude::*;

use crate::grid::ScalarField;
use crate::{Error, Result};

/// Linear cone filter of the classic sensitivity-filtering kind:
/// `S̃_e = Σ_f H_ef ξ_f S_f / (max(ξ_e, 10⁻³) Σ_f H_ef)` with
/// `H_ef = max(0, r − |x_e − x_f|)`.
#[derive(Debug, Clone)]
pub struct ConeFilter {
    offsets: Vec<([i64; 3], f64)>,
}

impl ConeFilter {
    /// `radius` in length units; grids must have isotropic in-plane spacing.
    pub fn new(radius: f64, h: f64, planar: bool) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("filter_radius", format!("must be > 0, got {radius}")));
        }
        let r = radius / h;
        let reach = r.ceil() as i64;
        let zr = if planar { 0 } else { reach };
        let mut offsets = Vec::new();
        for dk in -zr..=zr {
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    let d = ((di * di + dj * dj + dk * dk) as f64).sqrt();
                    let w = r - d;
                    if w > 0.0 {
                        offsets.push(([di, dj, dk], w));
                    }
                }
            }
        }
        Ok(ConeFilter { offsets })
    }

    pub fn apply(&self, s: &ScalarField, xi: &ScalarField) -> Result<ScalarField> {
        s.spec().ensure_matches(xi.spec(), "filter")?;
        let spec = *s.spec();
        let d = spec.dims();
        let sv = s.values();
        let xv = xi.values();
        let values: Vec<f64> = (0..spec.len())
            .into_par_iter()
            .map(|e| {
                let [i, j, k] = spec.ijk(e);
                let mut num = 0.0;
                let mut den = 0.0;
                for (off, w) in &self.offsets {
                    let (fi, fj, fk) = (i as i64 + off[0], j as i64 + off[1], k as i64 + off[2]);
                    if fi < 0 || fj < 0 || fk < 0 || fi >= d[0] as i64 || fj >= d[1] as i64 || fk >= d[2] as i64 {
                        continue;
                    }
                    let f = spec.index(fi as usize, fj as usize, fk as usize);
                    num += w * xv[f] * sv[f];
                    den += w;
                }
                num / (xv[e].max(1e-3) * den)
            })
            .collect();
        ScalarField::new(spec, values)
    }
}
