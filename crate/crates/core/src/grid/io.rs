//! `VOXFIELD v1` container: one ASCII header line followed by a
//! little-endian payload in the grid's row-major order.
//!
//! ```text
//! VOXFIELD v1 nx ny nz sx sy sz ox oy oz dtype\n
//! <nx*ny*nz values, f64 or u8>
//! ```
//!
//! Reals in the header use Rust's shortest round-trip formatting, so
//! write → read reproduces the grid bit for bit.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use super::{GridSpec, ScalarField};

const MAGIC: &str = "VOXFIELD";
const VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum FieldIoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed field header: {0}")]
    MalformedHeader(String),
    #[error("truncated payload: header needs {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("dimension mismatch: header needs {expected} payload bytes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("value {value} at voxel {index} cannot be stored as u8")]
    NotRepresentable { index: usize, value: f64 },
}

/// Payload element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F64,
    U8,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::U8 => 1,
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dtype::F64 => "f64",
            Dtype::U8 => "u8",
        })
    }
}

impl FromStr for Dtype {
    type Err = FieldIoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f64" => Ok(Dtype::F64),
            "u8" => Ok(Dtype::U8),
            other => Err(FieldIoError::MalformedHeader(format!("unknown dtype `{other}`"))),
        }
    }
}

pub fn encode_field(f: &ScalarField, dtype: Dtype) -> Result<Vec<u8>, FieldIoError> {
    let s = f.spec();
    let [nx, ny, nz] = s.dims();
    let [sx, sy, sz] = s.spacing();
    let [ox, oy, oz] = s.origin();
    let header = format!("{MAGIC} {VERSION} {nx} {ny} {nz} {sx} {sy} {sz} {ox} {oy} {oz} {dtype}\n");
    let mut out = Vec::with_capacity(header.len() + s.len() * dtype.width());
    out.extend_from_slice(header.as_bytes());
    match dtype {
        Dtype::F64 => {
            for v in f.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Dtype::U8 => {
            for (index, &value) in f.values().iter().enumerate() {
                if !(0.0..=255.0).contains(&value) || value.fract() != 0.0 {
                    return Err(FieldIoError::NotRepresentable { index, value });
                }
                out.push(value as u8);
            }
        }
    }
    Ok(out)
}

pub fn decode_field(bytes: &[u8]) -> Result<ScalarField, FieldIoError> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FieldIoError::MalformedHeader("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| FieldIoError::MalformedHeader("header is not UTF-8".into()))?;
    let tokens: Vec<&str> = header.split_ascii_whitespace().collect();
    if tokens.len() != 12 {
        return Err(FieldIoError::MalformedHeader(format!(
            "expected 12 header tokens, found {}",
            tokens.len()
        )));
    }
    if tokens[0] != MAGIC || tokens[1] != VERSION {
        return Err(FieldIoError::MalformedHeader(format!(
            "bad magic `{} {}`",
            tokens[0], tokens[1]
        )));
    }
    let int = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| FieldIoError::MalformedHeader(format!("bad dimension `{t}`")))
    };
    let real = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| FieldIoError::MalformedHeader(format!("bad real `{t}`")))
    };
    let dims = [int(tokens[2])?, int(tokens[3])?, int(tokens[4])?];
    let spacing = [real(tokens[5])?, real(tokens[6])?, real(tokens[7])?];
    let origin = [real(tokens[8])?, real(tokens[9])?, real(tokens[10])?];
    let dtype: Dtype = tokens[11].parse()?;
    let spec = GridSpec::new(dims, spacing, origin)
        .map_err(|e| FieldIoError::MalformedHeader(e.to_string()))?;

    let payload = &bytes[newline + 1..];
    let expected = spec.len() * dtype.width();
    if payload.len() < expected {
        return Err(FieldIoError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(FieldIoError::DimensionMismatch {
            expected,
            found: payload.len(),
        });
    }
    let values: Vec<f64> = match dtype {
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
        Dtype::U8 => payload.iter().map(|&b| f64::from(b)).collect(),
    };
    ScalarField::new(spec, values).map_err(|e| FieldIoError::MalformedHeader(e.to_string()))
}

pub fn write_field(f: &ScalarField, path: impl AsRef<Path>, dtype: Dtype) -> Result<(), FieldIoError> {
    let path = path.as_ref();
    let bytes = encode_field(f, dtype)?;
    fs::write(path, bytes).map_err(|source| FieldIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField, FieldIoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| FieldIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_field(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_random_3d_is_bitwise() {
        let spec = GridSpec::new([16, 8, 4], [0.1, 0.1, 0.1], [-0.3, 1.0 / 3.0, 2.5e-7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = ScalarField::from_fn(spec, |_| rng.gen::<f64>() * 1e3 - 5e2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.voxfield");
        write_field(&f, &path, Dtype::F64).unwrap();
        let g = read_field(&path).unwrap();
        assert_eq!(g.spec(), f.spec());
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn roundtrip_planar_u8() {
        let spec = GridSpec::planar(5, 3, 0.25).unwrap();
        let f = ScalarField::from_fn(spec, |[i, j, _]| ((i + j) % 2) as f64).unwrap();
        let g = decode_field(&encode_field(&f, Dtype::U8).unwrap()).unwrap();
        assert_eq!(g, f);
        assert_eq!(g.spec().dims()[2], 1);
    }

    #[test]
    fn truncated_payload_is_reported() {
        let f = ScalarField::constant(GridSpec::planar(4, 4, 1.0).unwrap(), 1.0);
        let mut bytes = encode_field(&f, Dtype::F64).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(decode_field(&bytes), Err(FieldIoError::Truncated { .. })));
    }

    #[test]
    fn oversized_payload_is_a_dimension_mismatch() {
        let f = ScalarField::constant(GridSpec::planar(2, 2, 1.0).unwrap(), 1.0);
        let mut bytes = encode_field(&f, Dtype::U8).unwrap();
        bytes.push(0);
        assert!(matches!(decode_field(&bytes), Err(FieldIoError::DimensionMismatch { .. })));
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(decode_field(b"no newline"), Err(FieldIoError::MalformedHeader(_))));
        assert!(matches!(
            decode_field(b"VOXFIELD v2 1 1 1 1 1 1 0 0 0 f64\n"),
            Err(FieldIoError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_field(b"VOXFIELD v1 1 1 1 1 1 1 0 0 0 f32\n"),
            Err(FieldIoError::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_field(b"VOXFIELD v1 0 1 1 1 1 1 0 0 0 u8\n"),
            Err(FieldIoError::MalformedHeader(_))
        ));
    }

    #[test]
    fn u8_rejects_fractional_values() {
        let f = ScalarField::constant(GridSpec::planar(1, 1, 1.0).unwrap(), 0.5);
        assert!(matches!(
            encode_field(&f, Dtype::U8),
            Err(FieldIoError::NotRepresentable { .. })
        ));
    }
}
