//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic          8 bytes  "TRJNCKPT"
//! version        u32      CHECKPOINT_VERSION
//! header_len     u64
//! header         header_len bytes of UTF-8 JSON (architecture, seed, classes, ...)
//! array_count    u64
//! per array:
//!   name_len     u32
//!   name         name_len bytes UTF-8
//!   value_count  u64
//!   values       value_count x f64 (IEEE-754 bits, little-endian)
//! ```
//!
//! Weights are stored as raw bits so a write/read cycle is bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::params::ParamStore;
use super::NnError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TRJNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<H> {
    pub version: u32,
    pub header: H,
    pub arrays: Vec<(String, Vec<f64>)>,
}

impl<H> Checkpoint<H> {
    pub fn from_params(header: H, params: &ParamStore) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            header,
            arrays: params
                .params()
                .iter()
                .map(|p| (p.name.clone(), p.values.clone()))
                .collect(),
        }
    }

    /// Copies the stored arrays into `params`, checking names and lengths.
    pub fn restore_into(&self, params: &mut ParamStore) -> Result<(), NnError> {
        for ((name, _), p) in self.arrays.iter().zip(params.params()) {
            if *name != p.name {
                return Err(NnError::Checkpoint(format!(
                    "parameter name mismatch: checkpoint has {name}, model expects {}",
                    p.name
                )));
            }
        }
        params
            .load_values(self.arrays.iter().map(|(_, v)| v.clone()).collect())
            .map_err(NnError::Checkpoint)
    }
}

impl<H: Serialize> Checkpoint<H> {
    pub fn to_bytes(&self) -> Result<Vec<u8>, NnError> {
        let header =
            serde_json::to_vec(&self.header).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        let mut out = Vec::with_capacity(
            32 + header.len()
                + self
                    .arrays
                    .iter()
                    .map(|(n, v)| 12 + n.len() + 8 * v.len())
                    .sum::<usize>(),
        );
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.arrays.len() as u64).to_le_bytes());
        for (name, values) in &self.arrays {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<(), NnError> {
        if self
            .arrays
            .iter()
            .flat_map(|(_, v)| v)
            .any(|v| !v.is_finite())
        {
            return Err(NnError::Checkpoint(
                "refusing to write non-finite weights".into(),
            ));
        }
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.buf.len())
            .ok_or_else(|| NnError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize, NnError> {
        usize::try_from(self.u64()?).map_err(|_| NnError::Checkpoint("length overflow".into()))
    }
}

impl<H: DeserializeOwned> Checkpoint<H> {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(NnError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let hlen = r.len()?;
        let header = serde_json::from_slice(r.take(hlen)?)
            .map_err(|e| NnError::Checkpoint(format!("header: {e}")))?;
        let count = r.len()?;
        let mut arrays = Vec::new();
        for _ in 0..count {
            let nlen = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(nlen)?)
                .map_err(|e| NnError::Checkpoint(e.to_string()))?
                .to_string();
            let n = r.len()?;
            let raw = r.take(
                n.checked_mul(8)
                    .ok_or_else(|| NnError::Checkpoint("length overflow".into()))?,
            )?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
                .collect();
            arrays.push((name, values));
        }
        if r.pos != bytes.len() {
            return Err(NnError::Checkpoint("trailing bytes".into()));
        }
        Ok(Self {
            version,
            header,
            arrays,
        })
    }

    pub fn read(path: &Path) -> Result<Self, NnError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
