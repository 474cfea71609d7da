//! Binary checkpoint format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "SRCP" | u32 format_version | str model_kind
//! | u32 n_hyper | (str key, str value) * n_hyper
//! | u32 n_params | (str name, u8 dtype, u32 rows, u32 cols, raw LE data) *
//! ```
//!
//! where `str` is a u32 length followed by UTF-8 bytes and dtype is 0 for
//! f32, 1 for f64. Round-trips are bit-exact for f64 entries; f32 entries
//! widen losslessly on load and narrow back to the same bits on save.

use super::optim::ParamSet;
use super::tensor::Tensor;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SRCP";

/// Storage precision for parameter entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes; not a checkpoint file")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// In-memory checkpoint: header plus named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model_kind: String,
    /// Hyperparameters in write order (sufficient to rebuild the model
    /// without a sidecar config).
    pub hyperparameters: Vec<(String, String)>,
    pub params: ParamSet,
    pub dtype: Dtype,
}

impl Checkpoint {
    pub fn new(model_kind: &str, hyperparameters: Vec<(String, String)>, params: ParamSet) -> Self {
        Checkpoint {
            model_kind: model_kind.to_string(),
            hyperparameters,
            params,
            dtype: Dtype::F64,
        }
    }

    pub fn hyper(&self, key: &str) -> Option<&str> {
        self.hyperparameters
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write_to(&self, w: &mut dyn Write) -> Result<(), CheckpointError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        write_str(w, &self.model_kind)?;
        w.write_all(&(self.hyperparameters.len() as u32).to_le_bytes())?;
        for (k, v) in &self.hyperparameters {
            write_str(w, k)?;
            write_str(w, v)?;
        }
        w.write_all(&(self.params.len() as u32).to_le_bytes())?;
        for (name, t) in self.params.iter() {
            write_str(w, name)?;
            let dtype_byte = match self.dtype {
                Dtype::F32 => 0u8,
                Dtype::F64 => 1u8,
            };
            w.write_all(&[dtype_byte])?;
            w.write_all(&(t.rows() as u32).to_le_bytes())?;
            w.write_all(&(t.cols() as u32).to_le_bytes())?;
            match self.dtype {
                Dtype::F32 => {
                    for &x in t.data() {
                        w.write_all(&(x as f32).to_le_bytes())?;
                    }
                }
                Dtype::F64 => {
                    for &x in t.data() {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut dyn Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        let model_kind = read_str(r)?;
        let n_hyper = read_u32(r)? as usize;
        let mut hyperparameters = Vec::with_capacity(n_hyper);
        for _ in 0..n_hyper {
            let k = read_str(r)?;
            let v = read_str(r)?;
            hyperparameters.push((k, v));
        }
        let n_params = read_u32(r)? as usize;
        let mut params = ParamSet::new();
        let mut dtype = Dtype::F64;
        for _ in 0..n_params {
            let name = read_str(r)?;
            let mut db = [0u8; 1];
            r.read_exact(&mut db)?;
            dtype = match db[0] {
                0 => Dtype::F32,
                1 => Dtype::F64,
                other => {
                    return Err(CheckpointError::Corrupt(format!("unknown dtype {other}")))
                }
            };
            let rows = read_u32(r)? as usize;
            let cols = read_u32(r)? as usize;
            let mut data = Vec::with_capacity(rows * cols);
            match dtype {
                Dtype::F32 => {
                    let mut buf = [0u8; 4];
                    for _ in 0..rows * cols {
                        r.read_exact(&mut buf)?;
                        data.push(f32::from_le_bytes(buf) as f64);
                    }
                }
                Dtype::F64 => {
                    let mut buf = [0u8; 8];
                    for _ in 0..rows * cols {
                        r.read_exact(&mut buf)?;
                        data.push(f64::from_le_bytes(buf));
                    }
                }
            }
            params.insert(name, Tensor::from_vec(rows, cols, data));
        }
        Ok(Checkpoint {
            model_kind,
            hyperparameters,
            params,
            dtype,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut file)
    }
}

fn write_str(w: &mut dyn Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_u32(r: &mut dyn Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_str(r: &mut dyn Read) -> Result<String, CheckpointError> {
    let len = read_u32(r)? as usize;
    if len > 1 << 24 {
        return Err(CheckpointError::Corrupt(format!("string length {len}")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CheckpointError::Corrupt(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_checkpoint() -> Checkpoint {
        let mut params = ParamSet::new();
        params.insert("layer.w", Tensor::from_vec(2, 3, vec![1.5, -2.25, 0.1, 7.0, -0.0, 3.3]));
        params.insert("layer.b", Tensor::row(&[0.125, 9.75, -1.0]));
        Checkpoint::new(
            "sampler",
            vec![("d_model".into(), "64".into()), ("space".into(), "2d".into())],
            params,
        )
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let ck = sample_checkpoint();
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(ck, back);
        // serialize again: byte-identical
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn f32_storage_roundtrips_through_f64() {
        let mut ck = sample_checkpoint();
        ck.dtype = Dtype::F32;
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.dtype, Dtype::F32);
        let mut buf2 = Vec::new();
        back.write_to(&mut buf2).unwrap();
        assert_eq!(buf, buf2, "narrow-widen-narrow must be stable");
    }

    #[test]
    fn rejects_bad_magic() {
        let err = Checkpoint::read_from(&mut &b"NOPE....."[..]).unwrap_err();
        assert!(matches!(err, CheckpointError::BadMagic));
    }
}
