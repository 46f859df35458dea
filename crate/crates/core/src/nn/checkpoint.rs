//! Binary parameter container.
//!
//! Layout: the 8-byte magic `TRIPLEAD`, a little-endian `u64` header length,
//! a UTF-8 JSON header, then the payload of every entry as consecutive
//! little-endian `f64` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Param, Parameterized};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"TRIPLEAD";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Offset of the entry in the payload, counted in `f64` values.
    pub offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: u32,
    seed: u64,
    meta: serde_json::Value,
    entries: Vec<CheckpointEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    /// Free-form model description (hyperparameters, channel kind).
    pub meta: serde_json::Value,
    pub tensors: Vec<(String, DenseMatrix<f64>)>,
}

impl Checkpoint {
    pub fn from_model<T: Scalar, M: Parameterized<T> + ?Sized>(
        model: &M,
        seed: u64,
        meta: serde_json::Value,
    ) -> Self {
        let tensors = model
            .params()
            .into_iter()
            .map(|(name, p)| (name, p.value.cast::<f64>()))
            .collect();
        Self {
            seed,
            meta,
            tensors,
        }
    }

    pub fn get(&self, name: &str) -> Option<&DenseMatrix<f64>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// Copies stored values into `model`, matching by name and shape.
    pub fn restore_into<T: Scalar, M: Parameterized<T> + ?Sized>(&self, model: &mut M) -> Result<()> {
        for (name, p) in model.params_mut() {
            let stored = self
                .get(&name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))?;
            load_param(p, stored, &name)?;
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut offset = 0;
        let entries = self
            .tensors
            .iter()
            .map(|(name, m)| {
                let e = CheckpointEntry {
                    name: name.clone(),
                    rows: m.rows(),
                    cols: m.cols(),
                    offset,
                };
                offset += m.rows() * m.cols();
                e
            })
            .collect();
        let header = serde_json::to_vec(&Header {
            format: FORMAT_VERSION,
            seed: self.seed,
            meta: self.meta.clone(),
            entries,
        })?;
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for (_, m) in &self.tensors {
            for &x in m.data() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        let mut header = vec![0u8; len];
        r.read_exact(&mut header)?;
        let header: Header = serde_json::from_slice(&header)?;
        if header.format != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {}",
                header.format
            )));
        }
        let mut tensors = Vec::with_capacity(header.entries.len());
        let mut expected_offset = 0;
        for e in header.entries {
            if e.offset != expected_offset {
                return Err(Error::Checkpoint(format!("entry `{}` has bad offset", e.name)));
            }
            let count = e.rows * e.cols;
            let mut buf = vec![0u8; count * 8];
            r.read_exact(&mut buf)?;
            let data = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            tensors.push((e.name, DenseMatrix::new(e.rows, e.cols, data)?));
            expected_offset += count;
        }
        Ok(Self {
            seed: header.seed,
            meta: header.meta,
            tensors,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn load_param<T: Scalar>(p: &mut Param<T>, stored: &DenseMatrix<f64>, name: &str) -> Result<()> {
    if p.shape() != stored.shape() {
        return Err(Error::Checkpoint(format!(
            "tensor `{name}` has shape {:?}, model expects {:?}",
            stored.shape(),
            p.shape()
        )));
    }
    p.value = stored.cast();
    p.zero_grad();
    Ok(())
}
