//! `BQSF` binary snapshots of physical fields.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "BQSF" | version: u16 = 1 | n: u32 | count: u16 | count x 16-byte ASCII name (NUL padded)
//! count x n*n f64 LE, row-major physical values
//! ```

use std::io::{Read, Write};
use std::path::Path;

use bousspec::spectral::{Grid, RealField};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"BQSF";
pub const VERSION: u16 = 1;
pub const NAME_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            fields: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) -> CliResult<()> {
        if name.len() > NAME_LEN || !name.is_ascii() || name.contains('\0') {
            return Err(CliError::Failed(format!(
                "snapshot field name `{name}` must be at most {NAME_LEN} ASCII characters"
            )));
        }
        if values.len() != self.n * self.n {
            return Err(CliError::Failed(format!(
                "field `{name}` has {} values, expected {}",
                values.len(),
                self.n * self.n
            )));
        }
        self.fields.push((name.to_string(), values));
        Ok(())
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn real_field(&self, name: &str) -> CliResult<RealField> {
        let v = self
            .field(name)
            .ok_or_else(|| CliError::config(format!("snapshot has no field `{name}`")))?;
        Ok(RealField::new(Grid::new(self.n)?, v.to_vec())?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let count = self.fields.len();
        let mut out = Vec::with_capacity(12 + count * (NAME_LEN + 8 * self.n * self.n));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(count as u16).to_le_bytes());
        for (name, _) in &self.fields {
            let mut buf = [0u8; NAME_LEN];
            buf[..name.len()].copy_from_slice(name.as_bytes());
            out.extend_from_slice(&buf);
        }
        for (_, values) in &self.fields {
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let bad = |m: &str| CliError::Failed(format!("malformed snapshot: {m}"));
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("missing BQSF magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
        let count = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;
        let header = 12 + count * NAME_LEN;
        let expect = header + count * n * n * 8;
        if bytes.len() != expect {
            return Err(bad(&format!("length {} but header implies {expect}", bytes.len())));
        }
        let mut fields = Vec::with_capacity(count);
        for i in 0..count {
            let raw = &bytes[12 + i * NAME_LEN..12 + (i + 1) * NAME_LEN];
            let end = raw.iter().position(|&b| b == 0).unwrap_or(NAME_LEN);
            let name = std::str::from_utf8(&raw[..end]).map_err(|_| bad("non-ASCII field name"))?;
            let start = header + i * n * n * 8;
            let values = bytes[start..start + n * n * 8]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            fields.push((name.to_string(), values));
        }
        Ok(Self { n, fields })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.to_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))?
            .read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
