//! `NNP1` checkpoint container.
//!
//! Layout:
//!
//! | bytes | content                                              |
//! |-------|------------------------------------------------------|
//! | 4     | magic `NNP1`                                         |
//! | 4     | JSON header length, little-endian u32                |
//! | n     | JSON header: schema, free-form meta, tensor specs    |
//! | ...   | per tensor, row-major f64 little-endian payloads in  |
//! |       | header order                                         |
//!
//! Readers are strict: wrong magic, short payloads, trailing bytes,
//! duplicate tensor names, and unknown schemas are all errors, and a
//! decoded checkpoint re-encodes to the identical byte string.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;
use crate::NnError;

const MAGIC: &[u8; 4] = b"NNP1";
const SCHEMA: &str = "nnp.v1";

/// One named parameter tensor recovered from a checkpoint.
#[derive(Clone, PartialEq, Debug)]
pub struct CheckpointTensor {
    pub name: String,
    pub tensor: Tensor,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: String,
    meta: serde_json::Value,
    tensors: Vec<TensorSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorSpec {
    name: String,
    shape: Vec<usize>,
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    meta: &serde_json::Value,
    tensors: &[(String, &Tensor)],
) -> Result<(), NnError> {
    for (i, (name, _)) in tensors.iter().enumerate() {
        if tensors[..i].iter().any(|(other, _)| other == name) {
            return Err(NnError::Format(format!("duplicate tensor name {name:?}")));
        }
    }
    let header = Header {
        schema: SCHEMA.to_string(),
        meta: meta.clone(),
        tensors: tensors
            .iter()
            .map(|(name, t)| TensorSpec { name: name.clone(), shape: t.shape().to_vec() })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let len = u32::try_from(json.len())
        .map_err(|_| NnError::Format("header exceeds u32 length".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    for (_, t) in tensors {
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(
    mut r: R,
) -> Result<(serde_json::Value, Vec<CheckpointTensor>), NnError> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(NnError::Format(format!("bad magic {magic:?}")));
    }
    let mut len = [0u8; 4];
    read_exact(&mut r, &mut len, "header length")?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    read_exact(&mut r, &mut json, "header")?;
    let header: Header = serde_json::from_slice(&json)?;
    if header.schema != SCHEMA {
        return Err(NnError::Format(format!("unsupported schema {:?}", header.schema)));
    }
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for (i, spec) in header.tensors.iter().enumerate() {
        if header.tensors[..i].iter().any(|other| other.name == spec.name) {
            return Err(NnError::Format(format!("duplicate tensor name {:?}", spec.name)));
        }
        let count = spec.shape.iter().product::<usize>();
        let mut data = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            read_exact(&mut r, &mut buf, "tensor payload")?;
            data.push(f64::from_le_bytes(buf));
        }
        tensors.push(CheckpointTensor {
            name: spec.name.clone(),
            tensor: Tensor::from_vec(&spec.shape, data)?,
        });
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok((header.meta, tensors)),
        Ok(_) => Err(NnError::Format("trailing bytes after declared tensors".into())),
        Err(e) => Err(NnError::Io(e)),
    }
}

pub fn save_checkpoint(
    path: &Path,
    meta: &serde_json::Value,
    tensors: &[(String, &Tensor)],
) -> Result<(), NnError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, meta, tensors)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(serde_json::Value, Vec<CheckpointTensor>), NnError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), NnError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            NnError::Format(format!("truncated checkpoint while reading {what}"))
        } else {
            NnError::Io(e)
        }
    })
}
