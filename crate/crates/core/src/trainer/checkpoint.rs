use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::encoder::{parameter_count, Activation, Encoder};
use crate::losses::Temperatures;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CCL1";
pub const FORMAT_VERSION: u32 = 1;

/// Sidecar metadata written next to every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub task: usize,
    /// Distillation coefficient the encoder was trained with; `None` for the
    /// first task.
    pub lambda_t: Option<f64>,
    pub temperatures: Temperatures,
    pub activation: Activation,
}

/// Encoder parameters plus the context they were trained in.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub encoder: Encoder,
    pub seed: u64,
    pub task: usize,
    pub lambda_t: Option<f64>,
    pub temperatures: Temperatures,
}

/// `path` with `.json` appended to its file name.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn read_u32(bytes: &[u8], at: usize, what: &'static str) -> Result<u32> {
    let chunk = bytes.get(at..at + 4).ok_or(Error::Truncated {
        what,
        needed: at + 4,
        available: bytes.len(),
    })?;
    Ok(u32::from_le_bytes(chunk.try_into().expect("4 bytes")))
}

impl Checkpoint {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            version: FORMAT_VERSION,
            dims: self.encoder.dims().to_vec(),
            seed: self.seed,
            task: self.task,
            lambda_t: self.lambda_t,
            temperatures: self.temperatures,
            activation: self.encoder.activation(),
        }
    }

    /// `"CCL1"`, u32 layer-width count, u32 widths, f64 parameters; all
    /// little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.encoder.dims();
        let params = self.encoder.params();
        let mut out = Vec::with_capacity(8 + 4 * dims.len() + 8 * params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for &d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for p in params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    /// Parses the binary part; returns layer widths and parameters.
    pub fn parse_bytes(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
        let magic = bytes.get(..4).ok_or(Error::Truncated {
            what: "checkpoint magic",
            needed: 4,
            available: bytes.len(),
        })?;
        if magic != MAGIC {
            return Err(Error::BadMagic {
                file: "checkpoint",
                expected: u32::from_be_bytes(*MAGIC),
                found: u32::from_be_bytes(magic.try_into().expect("4 bytes")),
            });
        }
        let count = read_u32(bytes, 4, "checkpoint layer count")? as usize;
        let dims = (0..count)
            .map(|i| read_u32(bytes, 8 + 4 * i, "checkpoint layer widths").map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let start = 8 + 4 * count;
        let n = parameter_count(&dims);
        let needed = start + 8 * n;
        if bytes.len() < needed {
            return Err(Error::Truncated {
                what: "checkpoint parameters",
                needed,
                available: bytes.len(),
            });
        }
        if bytes.len() > needed {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - needed)));
        }
        let params = bytes[start..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok((dims, params))
    }

    /// Writes the binary to `path` and the manifest next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        fs::write(manifest_path(path), serde_json::to_string_pretty(&self.manifest())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (dims, params) = Self::parse_bytes(&fs::read(path)?)?;
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(manifest_path(path))?)?;
        if manifest.version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported manifest version {}", manifest.version)));
        }
        if manifest.dims != dims {
            return Err(Error::Checkpoint(format!(
                "manifest widths {:?} disagree with binary {:?}",
                manifest.dims, dims
            )));
        }
        Ok(Checkpoint {
            encoder: Encoder::from_parameters(dims, manifest.activation, params)?,
            seed: manifest.seed,
            task: manifest.task,
            lambda_t: manifest.lambda_t,
            temperatures: manifest.temperatures,
        })
    }
}
