use std::f64::consts::{PI, TAU};

use nalgebra::{Unit, UnitQuaternion, Vector3};

use crate::{Error, Result};

/// Matrix entries this close to -1, 0 or 1 are snapped so that quarter turns
/// map the lattice onto itself exactly.
const SNAP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rotation {
    /// Rotation about `+z` by `angle` radians, wrapped to `[0, 2π)`.
    Planar { angle: f64 },
    Spatial(UnitQuaternion<f64>),
}

/// One element of an orientation set Θ: a rotation plus its index in the set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub id: usize,
    rotation: Rotation,
    matrix: [[f64; 3]; 3],
}

impl Orientation {
    pub fn planar(id: usize, angle: f64) -> Self {
        let angle = angle.rem_euclid(TAU);
        // rem_euclid can return TAU itself for tiny negative inputs
        let angle = if angle >= TAU { 0.0 } else { angle };
        let (s, c) = angle.sin_cos();
        let m = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        Orientation {
            id,
            rotation: Rotation::Planar { angle },
            matrix: snap(m),
        }
    }

    pub fn spatial(id: usize, q: UnitQuaternion<f64>) -> Self {
        // re-normalize so the stored quaternion is unit to machine precision
        let q = UnitQuaternion::new_normalize(q.into_inner());
        let r = q.to_rotation_matrix();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = r[(i, j)];
            }
        }
        Orientation {
            id,
            rotation: Rotation::Spatial(q),
            matrix: snap(m),
        }
    }

    pub fn identity(id: usize, planar: bool) -> Self {
        if planar {
            Orientation::planar(id, 0.0)
        } else {
            Orientation::spatial(id, UnitQuaternion::identity())
        }
    }

    pub fn from_axis_angle(id: usize, axis: [f64; 3], angle: f64) -> Result<Self> {
        let v = Vector3::from(axis);
        if !(v.norm() > 0.0) || !v.iter().all(|c| c.is_finite()) || !angle.is_finite() {
            return Err(Error::param("axis", format!("rotation axis must be nonzero and finite, got {axis:?}")));
        }
        Ok(Orientation::spatial(
            id,
            UnitQuaternion::from_axis_angle(&Unit::new_normalize(v), angle),
        ))
    }

    /// Orientation that points the tool's canonical axis along `direction`.
    ///
    /// Tools are built with the holder stacked along `+y` (planar) or `+z`
    /// (spatial) from a cutter tip at the local origin, so the direction is
    /// the side of the part the tool approaches from.
    pub fn from_direction(id: usize, direction: [f64; 3], planar: bool) -> Result<Self> {
        let d = Vector3::from(direction);
        if !(d.norm() > 0.0) || !d.iter().all(|c| c.is_finite()) {
            return Err(Error::param("direction", format!("tool direction must be nonzero, got {direction:?}")));
        }
        if planar {
            if direction[2] != 0.0 {
                return Err(Error::param("direction", "planar tool directions must have z = 0"));
            }
            return Ok(Orientation::planar(id, direction[1].atan2(direction[0]) - 0.5 * PI));
        }
        let z = Vector3::z();
        let d = d.normalize();
        let q = UnitQuaternion::rotation_between(&z, &d).unwrap_or_else(|| {
            // antiparallel: half turn about x
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI)
        });
        Ok(Orientation::spatial(id, q))
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn is_planar(&self) -> bool {
        matches!(self.rotation, Rotation::Planar { .. })
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        match self.rotation {
            Rotation::Planar { angle } => UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle),
            Rotation::Spatial(q) => q,
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.matrix
    }

    #[inline]
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    #[inline]
    pub fn apply_inverse(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    /// True when the rotation permutes lattice axes (quarter turns only).
    pub fn is_lattice_preserving(&self) -> bool {
        self.matrix
            .iter()
            .flatten()
            .all(|&v| v == 0.0 || v == 1.0 || v == -1.0)
    }
}

fn snap(mut m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    for v in m.iter_mut().flatten() {
        for target in [-1.0, 0.0, 1.0] {
            if (*v - target).abs() < SNAP_EPS {
                *v = target;
            }
        }
    }
    m
}
