//! Binary field container used for checkpoints.
//!
//! Layout (all little-endian): magic `TSLF`, then `version`, `d`, `n`, `c`
//! as u32, then `c * n^d` complex coefficients as interleaved f64 re/im in
//! component-major, row-major FFT order. A JSON sidecar with the same stem
//! carries free-form metadata.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 4] = b"TSLF";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub n: usize,
    pub comps: usize,
    pub label: String,
    pub t: Option<f64>,
}

impl FieldMeta {
    pub fn for_field(field: &SpectralField, label: &str, t: Option<f64>) -> Self {
        Self {
            format: "TSLF".into(),
            version: VERSION,
            dim: field.grid().dim(),
            n: field.grid().n(),
            comps: field.comps(),
            label: label.into(),
            t,
        }
    }
}

pub fn encode(field: &SpectralField) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 16 * field.coeffs().len());
    out.extend_from_slice(MAGIC);
    for v in [VERSION, field.grid().dim() as u32, field.grid().n() as u32, field.comps() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<SpectralField> {
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing TSLF magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = word(0);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (dim, n, comps) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let grid = TorusGrid::new(dim, n)?;
    let count = comps * grid.len();
    let payload = &bytes[20..];
    if payload.len() != 16 * count {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            16 * count
        )));
    }
    let coeffs = payload
        .chunks_exact(16)
        .map(|ch| {
            let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
            let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    SpectralField::from_coeffs(grid, comps, coeffs)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_field(path: &Path, field: &SpectralField, meta: &FieldMeta) -> Result<()> {
    std::fs::File::create(path)?.write_all(&encode(field))?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(SpectralField, Option<FieldMeta>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let field = decode(&bytes)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(side)?)?)
    } else {
        None
    };
    Ok((field, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_trig_polynomial, rng_for};

    #[test]
    fn header_layout_is_fixed() {
        let g = TorusGrid::new(2, 8).unwrap();
        let f = SpectralField::constant(g, 2.5);
        let bytes = encode(&f);
        assert_eq!(&bytes[..4], b"TSLF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2.5);
        assert_eq!(bytes.len(), 20 + 16 * 64);
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.tslf");
        let g = TorusGrid::new(3, 8).unwrap();
        let f = random_trig_polynomial(g, 3, 2, 0.0, false, &mut rng_for(1, 2));
        let meta = FieldMeta::for_field(&f, "v", Some(0.5));
        write_field(&path, &f, &meta).unwrap();
        let (back, m) = read_field(&path).unwrap();
        assert_eq!(back, f);
        assert_eq!(m.unwrap(), meta);
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = TorusGrid::new(2, 8).unwrap();
        let mut bytes = encode(&SpectralField::zeros(g, 1));
        bytes.pop();
        assert!(decode(&bytes).is_err());
        assert!(decode(b"NOPE0000000000000000").is_err());
    }
}
