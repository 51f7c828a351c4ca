//! Voxel topology optimization under multi-axis machining accessibility
//! constraints.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`]: uniform voxel grids, scalar/binary fields, field file I/O.
//! - [`morphology`]: rotations, reflection and FFT-based linear convolution,
//!   which together realize configuration-space obstacles and sweeps.
//! - [`accessibility`]: tool assemblies, the inaccessibility measure field
//!   (IMF) and the accessible / inaccessible / secluded decomposition.
//! - [`fea`]: matrix-free linear elasticity with SIMP interpolation.
//! - [`topopt`]: the accessibility-constrained SIMP loop.
//! - [`planner`]: greedy machining process plans for finished designs.
//!
//! Voxel addressing is row-major with `x` fastest: voxel `(i, j, k)` lives at
//! `i + nx * (j + ny * k)`. Planar problems are grids with `nz == 1`.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the element formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod accessibility;
mod error;
pub mod fea;
pub mod grid;
pub mod morphology;
pub mod planner;
pub mod scene;
pub mod topopt;

pub use error::{Error, Result};
