//! Legacy ASCII VTK `STRUCTURED_POINTS` export for visualization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::io::FieldIoError;
use super::ScalarField;

/// Render one or more fields on the same grid as a legacy VTK document.
/// Fields on other grids than the first are skipped.
pub fn to_vtk_string(fields: &[(&str, &ScalarField)]) -> String {
    let mut out = String::new();
    let Some((_, first)) = fields.first() else {
        return out;
    };
    let spec = *first.spec();
    let [nx, ny, nz] = spec.dims();
    let [sx, sy, sz] = spec.spacing();
    let [ox, oy, oz] = spec.origin();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "mtopt voxel fields");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {nx} {ny} {nz}");
    let _ = writeln!(out, "ORIGIN {ox} {oy} {oz}");
    let _ = writeln!(out, "SPACING {sx} {sy} {sz}");
    let _ = writeln!(out, "POINT_DATA {}", spec.len());
    for (name, field) in fields.iter().filter(|(_, f)| f.spec() == &spec) {
        let _ = writeln!(out, "SCALARS {name} double 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for row in field.values().chunks(nx) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
    }
    out
}

pub fn write_vtk(path: impl AsRef<Path>, fields: &[(&str, &ScalarField)]) -> Result<(), FieldIoError> {
    let path = path.as_ref();
    fs::write(path, to_vtk_string(fields)).map_err(|source| FieldIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
