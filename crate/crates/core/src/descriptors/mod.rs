//! Scan-to-descriptor encoders and their comparison functions.
//!
//! | method        | input                         | descriptor           | comparison              |
//! |---------------|-------------------------------|----------------------|-------------------------|
//! | `RingKey`     | preprocessed polar scan       | mean over azimuths   | squared Euclidean       |
//! | `RaPlace`     | raw polar scan -> Cartesian   | sinogram spectrum    | max circular correlation|
//! | `RadVLAD`     | preprocessed polar rows       | VLAD residual sums   | squared Euclidean       |
//! | `FFT-RadVLAD` | radial FFT magnitude rows     | VLAD residual sums   | squared Euclidean       |

mod raplace;
mod ring_key;
mod vlad;

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use raplace::{
    encode_raplace, radon_sinogram, raplace_similarity, RaplaceConfig, RaplaceDescriptor,
    RaplaceEncoder, RaplaceMatcher,
};
pub use ring_key::{encode_ring_key, RingKeyDescriptor};
pub use vlad::{encode_vlad, VladDescriptor};

/// Descriptors compared by squared Euclidean distance.
pub trait VectorDescriptor {
    fn values(&self) -> &[f64];
}

/// Squared Euclidean distance between two descriptors of the same kind.
pub fn descriptor_distance<D: VectorDescriptor>(a: &D, b: &D) -> Result<f64> {
    squared_euclidean(a.values(), b.values())
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::argument(format!(
            "descriptor lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(crate::codebook::squared_distance(a, b))
}

/// Any descriptor, as stored in a `DESC` file.
#[derive(Clone, Debug, PartialEq)]
pub enum Descriptor {
    RingKey(RingKeyDescriptor),
    Vlad(VladDescriptor),
    Raplace(RaplaceDescriptor),
}

const DESC_MAGIC: &[u8; 4] = b"DESC";

impl Descriptor {
    fn kind(&self) -> u8 {
        match self {
            Descriptor::RingKey(_) => 0,
            Descriptor::Vlad(_) => 1,
            Descriptor::Raplace(_) => 2,
        }
    }

    /// `DESC` layout: magic, u8 kind, one (RingKey: length) or two (VLAD:
    /// k, W; RaPlace: angles, radial samples) u32 dimensions, f64 payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(DESC_MAGIC);
        out.push(self.kind());
        let (dims, payload): (Vec<usize>, Vec<f64>) = match self {
            Descriptor::RingKey(d) => (vec![d.values.len()], d.values.clone()),
            Descriptor::Vlad(d) => (vec![d.k(), d.w()], d.values().to_vec()),
            Descriptor::Raplace(d) => {
                let (a, r) = d.spectrum().dim();
                (vec![a, r], d.spectrum().iter().copied().collect())
            }
        };
        for d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < 5 || &bytes[..4] != DESC_MAGIC {
            return Err(Error::ingest(path, "missing DESC header"));
        }
        let kind = bytes[4];
        let n_dims = match kind {
            0 => 1,
            1 | 2 => 2,
            other => {
                return Err(Error::ingest(
                    path,
                    format!("unknown descriptor kind {other}"),
                ))
            }
        };
        let dims_end = 5 + 4 * n_dims;
        if bytes.len() < dims_end {
            return Err(Error::ingest(path, "truncated DESC dimensions"));
        }
        let dims: Vec<usize> = bytes[5..dims_end]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let expected: usize = dims.iter().product();
        let payload = &bytes[dims_end..];
        if payload.len() != expected * 8 {
            return Err(Error::ingest(
                path,
                format!("expected {expected} f64 values"),
            ));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let wrap = |e: Error| Error::ingest(path, e.to_string());
        Ok(match kind {
            0 => Descriptor::RingKey(RingKeyDescriptor::new(values).map_err(wrap)?),
            1 => Descriptor::Vlad(VladDescriptor::new(values, dims[0], dims[1]).map_err(wrap)?),
            _ => {
                let spectrum =
                    Array2::from_shape_vec((dims[0], dims[1]), values).expect("length checked");
                Descriptor::Raplace(RaplaceDescriptor::new(spectrum).map_err(wrap)?)
            }
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::ingest(path, e.to_string()))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}
