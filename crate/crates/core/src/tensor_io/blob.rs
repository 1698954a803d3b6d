//! Self-describing binary tensor blobs.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes   "CREGTNSR"
//! version  u32       1
//! dtype    u32       0 = f32, 1 = f64
//! ndim     u32
//! dims     ndim x u64
//! payload  row-major values, little-endian
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CREGTNSR";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_FIXED: usize = 8 + 4 + 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn code(self) -> u32 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(DType::F32),
            1 => Some(DType::F64),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
        }
    }
}

/// An n-dimensional array with a fixed element type.
///
/// Construction checks that the shape accounts for every stored value; the
/// finiteness check happens on load so that writers can round-trip anything.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBlob {
    shape: Vec<u64>,
    data: TensorData,
}

impl TensorBlob {
    pub fn new(shape: Vec<u64>, data: TensorData) -> Result<Self> {
        let expected = shape.iter().product::<u64>();
        if expected != data.len() as u64 {
            return Err(Error::ShapeDataMismatch {
                shape,
                expected,
                found: data.len(),
            });
        }
        Ok(TensorBlob { shape, data })
    }

    pub fn from_f32(shape: &[usize], values: Vec<f32>) -> Result<Self> {
        Self::new(
            shape.iter().map(|&d| d as u64).collect(),
            TensorData::F32(values),
        )
    }

    pub fn from_f64(shape: &[usize], values: Vec<f64>) -> Result<Self> {
        Self::new(
            shape.iter().map(|&d| d as u64).collect(),
            TensorData::F64(values),
        )
    }

    pub fn zeros(shape: &[usize], dtype: DType) -> Self {
        let n = shape.iter().product::<usize>();
        let data = match dtype {
            DType::F32 => TensorData::F32(vec![0.0; n]),
            DType::F64 => TensorData::F64(vec![0.0; n]),
        };
        TensorBlob {
            shape: shape.iter().map(|&d| d as u64).collect(),
            data,
        }
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn shape(&self) -> &[u64] {
        &self.shape
    }

    /// Shape as `usize`, convenient for indexing.
    pub fn dims(&self) -> Vec<usize> {
        self.shape.iter().map(|&d| d as usize).collect()
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    /// Values widened to `f64`. Widening from `f32` is exact.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F32(v) => v.iter().map(|&x| f64::from(x)).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        match &self.data {
            TensorData::F32(v) => v.iter().position(|x| !x.is_finite()),
            TensorData::F64(v) => v.iter().position(|x| !x.is_finite()),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            HEADER_FIXED + 8 * self.shape.len() + self.len() * self.dtype().size(),
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.dtype().code().to_le_bytes());
        out.extend_from_slice(&(self.shape.len() as u32).to_le_bytes());
        for &d in &self.shape {
            out.extend_from_slice(&d.to_le_bytes());
        }
        match &self.data {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    /// Parses a blob from bytes. `path` is only used to label errors.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let truncated = |expected: u64| Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len() as u64,
        };
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
            });
        }
        if bytes.len() < HEADER_FIXED {
            return Err(truncated(HEADER_FIXED as u64));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                path: path.to_path_buf(),
                version,
            });
        }
        let code = u32_at(12);
        let dtype = DType::from_code(code).ok_or(Error::UnsupportedDtype {
            path: path.to_path_buf(),
            code,
        })?;
        let ndim = u32_at(16) as usize;
        let header_len = HEADER_FIXED as u64 + 8 * ndim as u64;
        if (bytes.len() as u64) < header_len {
            return Err(truncated(header_len));
        }
        let shape: Vec<u64> = (0..ndim)
            .map(|i| {
                let off = HEADER_FIXED + 8 * i;
                u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap())
            })
            .collect();
        let count = shape
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| truncated(u64::MAX))?;
        let expected = count
            .checked_mul(dtype.size() as u64)
            .and_then(|p| p.checked_add(header_len))
            .ok_or_else(|| truncated(u64::MAX))?;
        if (bytes.len() as u64) < expected {
            return Err(truncated(expected));
        }
        if (bytes.len() as u64) > expected {
            return Err(Error::TrailingBytes {
                path: path.to_path_buf(),
                extra: bytes.len() as u64 - expected,
            });
        }
        let payload = &bytes[header_len as usize..];
        let data = match dtype {
            DType::F32 => TensorData::F32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::F64 => TensorData::F64(
                payload
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
        };
        let blob = TensorBlob { shape, data };
        if let Some(index) = blob.first_non_finite() {
            return Err(Error::NonFinite {
                path: path.to_path_buf(),
                index,
            });
        }
        Ok(blob)
    }
}

pub fn write_blob(tensor: &TensorBlob, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&tensor.to_bytes())
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_blob(path: impl AsRef<Path>) -> Result<TensorBlob> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    TensorBlob::from_bytes(&bytes, path)
}
