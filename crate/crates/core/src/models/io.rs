//! Model file format ("FSNN").
//!
//! Layout, little-endian: magic `FSNN`, version u8, u32-length-prefixed JSON
//! header (spec, metadata, init seed), parameter count u32, then for each
//! parameter its name, rank u8, u32 dimensions and raw f32 values, and finally
//! a CRC-32 of every preceding byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{build, Model, ModelMeta};
use super::spec::ModelSpec;
use crate::binio::{ReadResult, Reader, Writer};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"FSNN";
const VERSION: u8 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    meta: ModelMeta,
    init_seed: u64,
}

pub fn to_bytes(model: &Model) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        spec: model.spec.clone(),
        meta: model.meta.clone(),
        init_seed: model.init_seed,
    })?;
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u8(VERSION);
    w.u32(header.len() as u32);
    w.bytes(&header);
    let params = model.params();
    w.u32(params.len() as u32);
    for p in params {
        w.str(&p.name);
        w.u8(p.shape().len() as u8);
        for &d in p.shape() {
            w.u32(d as u32);
        }
        for &v in p.value.data() {
            w.f32(v);
        }
    }
    Ok(w.finish_with_crc())
}

pub fn from_bytes(data: &[u8]) -> Result<Model> {
    parse(data).map_err(Error::CorruptModel)
}

fn parse(data: &[u8]) -> ReadResult<Model> {
    if data.len() < 5 || &data[..4] != MAGIC {
        return Err("bad magic".into());
    }
    if data[4] != VERSION {
        return Err(format!("unsupported version {}", data[4]));
    }
    let mut r = Reader::with_crc(data)?;
    r.take(5)?;
    let len = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(len)?).map_err(|e| format!("header: {e}"))?;
    let mut model: Model = build(&header.spec, header.init_seed).map_err(|e| format!("spec: {e}"))?;
    model.meta = header.meta;
    let count = r.u32()? as usize;
    let mut params = model.params_mut();
    if count != params.len() {
        return Err(format!("{count} parameters stored, spec defines {}", params.len()));
    }
    for p in params.iter_mut() {
        let name = r.str()?;
        if name != p.name {
            return Err(format!("parameter `{name}` where `{}` was expected", p.name));
        }
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<ReadResult<Vec<_>>>()?;
        if shape != p.shape() {
            return Err(format!("parameter `{name}` has shape {shape:?}, expected {:?}", p.shape()));
        }
        let values = r.f32s(p.len())?;
        p.value = Tensor::new(&shape, values).map_err(|e| e.to_string())?;
    }
    if !r.is_done() {
        return Err("trailing bytes".into());
    }
    Ok(model)
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    let data = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    from_bytes(&data)
}
