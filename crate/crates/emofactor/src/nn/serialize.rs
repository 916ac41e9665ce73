//! Bit-exact parameter blob format.
//!
//! Layout: magic, version, tensor count, then per tensor
//! (name length, name bytes, ndim, dims as u64 LE, data as f64 LE bits).
//! Loading restores the exact f64 bit patterns, so a round-tripped model
//! reproduces forward outputs bitwise.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::{HasTensors, TensorMut};

const MAGIC: &[u8; 8] = b"EFPARAM1";

pub fn write_params<M: HasTensors>(model: &M, w: &mut impl Write) -> std::io::Result<()> {
    let tensors = model.tensors();
    w.write_all(MAGIC)?;
    w.write_all(&(tensors.len() as u64).to_le_bytes())?;
    for (name, t) in tensors {
        let name_bytes = name.as_bytes();
        w.write_all(&(name_bytes.len() as u64).to_le_bytes())?;
        w.write_all(name_bytes)?;
        let shape = t.shape();
        w.write_all(&(shape.len() as u64).to_le_bytes())?;
        for d in &shape {
            w.write_all(&(*d as u64).to_le_bytes())?;
        }
        for v in t.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Serializes to a byte vector (used for hashing and saving).
pub fn params_to_bytes<M: HasTensors>(model: &M) -> Vec<u8> {
    let mut buf = Vec::new();
    write_params(model, &mut buf).expect("in-memory write cannot fail");
    buf
}

/// Loads a blob into an already-constructed model of matching architecture.
pub fn read_params<M: HasTensors>(model: &mut M, r: &mut impl Read) -> Result<()> {
    let bad = |m: &str| Error::Invalid(format!("parameter blob: {m}"));

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| bad(&e.to_string()))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let count = read_u64(r).map_err(|e| bad(&e.to_string()))? as usize;
    let mut tensors = model.tensors_mut();
    if count != tensors.len() {
        return Err(bad(&format!("expected {} tensors, blob has {count}", tensors.len())));
    }
    for (name, t) in tensors.iter_mut() {
        let name_len = read_u64(r).map_err(|e| bad(&e.to_string()))? as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf).map_err(|e| bad(&e.to_string()))?;
        if name_buf != name.as_bytes() {
            return Err(bad(&format!(
                "tensor name mismatch: blob has {:?}, model expects {name:?}",
                String::from_utf8_lossy(&name_buf)
            )));
        }
        let ndim = read_u64(r).map_err(|e| bad(&e.to_string()))? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(read_u64(r).map_err(|e| bad(&e.to_string()))? as usize);
        }
        if dims != t.shape() {
            return Err(bad(&format!("shape mismatch for {name}: blob {dims:?} vs model {:?}", t.shape())));
        }
        read_f64_into(r, t).map_err(|e| bad(&e.to_string()))?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64_into(r: &mut impl Read, t: &mut TensorMut<'_>) -> std::io::Result<()> {
    for v in t.as_slice_mut().iter_mut() {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        *v = f64::from_le_bytes(b);
    }
    Ok(())
}
