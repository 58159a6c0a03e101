//! File formats: the QD2D field snapshot (self-describing, bit-exact) and
//! CSV curve tables with a `#`-prefixed metadata preamble.
//!
//! Snapshot layout:
//!   bytes 0..4    magic "QD2D"
//!   bytes 4..8    format version (u32 LE)
//!   bytes 8..12   header length in bytes (u32 LE)
//!   ...           JSON header (grid, model parameters, time, provenance)
//!   padding       zero bytes to the next 8-byte boundary
//!   payload       nx*ny complex samples, interleaved re/im f64 LE, row-major
//!   trailer       SHA-256 of everything before it (32 bytes)

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qdrop2d_core::{ComplexField, Grid2, ModelParams, SharedGrid};

pub const MAGIC: &[u8; 4] = b"QD2D";
pub const VERSION: u32 = 1;

#[derive(Debug)]
pub enum SnapshotError {
    Io(std::io::Error),
    BadMagic,
    VersionMismatch(u32),
    HeaderParse(String),
    ShapeMismatch { expected: usize, found: usize },
    ChecksumMismatch,
}

impl std::fmt::Display for SnapshotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SnapshotError::Io(e) => write!(f, "i/o error: {e}"),
            SnapshotError::BadMagic => write!(f, "not a QD2D snapshot (bad magic)"),
            SnapshotError::VersionMismatch(v) => {
                write!(f, "unsupported snapshot version {v} (expected {VERSION})")
            }
            SnapshotError::HeaderParse(e) => write!(f, "snapshot header unreadable: {e}"),
            SnapshotError::ShapeMismatch { expected, found } => write!(
                f,
                "payload holds {found} samples but the header grid needs {expected}"
            ),
            SnapshotError::ChecksumMismatch => write!(f, "snapshot checksum mismatch"),
        }
    }
}

impl std::error::Error for SnapshotError {}

impl From<std::io::Error> for SnapshotError {
    fn from(e: std::io::Error) -> Self {
        SnapshotError::Io(e)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub params: ModelParams,
    pub t: f64,
    pub provenance: String,
}

pub fn write_field(
    path: &Path,
    field: &ComplexField,
    params: &ModelParams,
    t: f64,
    provenance: &str,
) -> Result<(), SnapshotError> {
    let grid = field.grid();
    let header = SnapshotHeader {
        nx: grid.nx(),
        ny: grid.ny(),
        lx: grid.lx(),
        ly: grid.ly(),
        params: *params,
        t,
        provenance: provenance.to_string(),
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| SnapshotError::HeaderParse(e.to_string()))?;

    let mut bytes: Vec<u8> = Vec::with_capacity(16 + header_json.len() + grid.len() * 16 + 32);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&header_json);
    while bytes.len() % 8 != 0 {
        bytes.push(0);
    }
    for z in field.data() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);

    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(ComplexField, SnapshotHeader), SnapshotError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 44 || &bytes[0..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(SnapshotError::VersionMismatch(version));
    }
    let body_len = bytes.len() - 32;
    let (body, trailer) = bytes.split_at(body_len);
    let digest = Sha256::digest(body);
    if digest.as_slice() != trailer {
        return Err(SnapshotError::ChecksumMismatch);
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if 12 + header_len > body_len {
        return Err(SnapshotError::HeaderParse("header exceeds file".into()));
    }
    let header: SnapshotHeader = serde_json::from_slice(&bytes[12..12 + header_len])
        .map_err(|e| SnapshotError::HeaderParse(e.to_string()))?;
    let mut offset = 12 + header_len;
    offset += (8 - offset % 8) % 8;
    let payload = &body[offset..];
    if payload.len() % 16 != 0 {
        return Err(SnapshotError::ShapeMismatch {
            expected: header.nx * header.ny,
            found: payload.len() / 16,
        });
    }
    let found = payload.len() / 16;
    if found != header.nx * header.ny {
        return Err(SnapshotError::ShapeMismatch {
            expected: header.nx * header.ny,
            found,
        });
    }
    let grid: SharedGrid = Grid2::new(header.nx, header.ny, header.lx, header.ly)
        .map_err(|e| SnapshotError::HeaderParse(e.to_string()))?;
    let mut data = Vec::with_capacity(found);
    for chunk in payload.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        data.push(Complex64::new(re, im));
    }
    let field = ComplexField::from_data(&grid, data)
        .map_err(|e| SnapshotError::HeaderParse(e.to_string()))?;
    Ok((field, header))
}

/// RFC-4180 rows under a `#`-prefixed metadata preamble.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(
        path: &Path,
        preamble: &[(&str, String)],
        columns: &[&str],
    ) -> std::io::Result<CsvWriter> {
        let mut out = BufWriter::new(File::create(path)?);
        for (key, value) in preamble {
            writeln!(out, "# {key}={value}")?;
        }
        writeln!(out, "{}", columns.join(","))?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        writeln!(self.out, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Deterministic shortest-roundtrip float formatting.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<bool>) -> String {
    match v {
        Some(true) => "true".into(),
        Some(false) => "false".into(),
        None => "".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qdrop2d_core::exact_droplet;

    fn sample() -> (ComplexField, ModelParams) {
        let g = Grid2::new(32, 16, 4.0, 2.0).unwrap();
        let f = exact_droplet(&g, 1.5);
        let p = ModelParams {
            sigma: 1.0,
            omega: 0.25,
            v0: -0.1,
            v1: 1.0,
            w0: 1.5,
            mu: 2.0,
        };
        (f, p)
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.qd2d");
        let (f, p) = sample();
        write_field(&path, &f, &p, 1.25, "cafe").unwrap();
        let (back, header) = read_field(&path).unwrap();
        assert_eq!(header.t, 1.25);
        assert_eq!(header.provenance, "cafe");
        assert_eq!(header.params, p);
        for (a, b) in back.data().iter().zip(f.data()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.qd2d");
        let (f, p) = sample();
        write_field(&path, &f, &p, 0.0, "").unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(
            read_field(&path),
            Err(SnapshotError::ChecksumMismatch)
        ));
    }

    #[test]
    fn corrupted_shape_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.qd2d");
        let (f, p) = sample();
        write_field(&path, &f, &p, 0.0, "").unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // rewrite "nx":32 -> "nx":64 in the JSON header, then re-stamp the
        // checksum so only the shape check can object
        let needle = b"\"nx\":32";
        let pos = bytes
            .windows(needle.len())
            .position(|w| w == needle)
            .expect("header layout");
        bytes.splice(pos..pos + needle.len(), b"\"nx\":64".iter().cloned());
        let body_len = bytes.len() - 32;
        let digest = Sha256::digest(&bytes[..body_len]);
        bytes[body_len..].copy_from_slice(&digest);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_field(&path),
            Err(SnapshotError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn wrong_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.qd2d");
        std::fs::write(&path, b"NOPE-this-is-not-a-snapshot-at-all-really-not").unwrap();
        assert!(matches!(read_field(&path), Err(SnapshotError::BadMagic)));
    }
}
