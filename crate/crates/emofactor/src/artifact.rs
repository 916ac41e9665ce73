//! Model artifacts on disk: a parameter blob plus a JSON sidecar.
//!
//! The blob is the bit-exact tensor serialization from [`crate::nn::serialize`];
//! the sidecar carries whatever config/provenance the owning module defines.
//! For a blob at `PATH`, the sidecar lives at `PATH.json`.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};
use crate::nn::serialize::{params_to_bytes, read_params};
use crate::nn::HasTensors;

/// `PATH` -> `PATH.json`.
pub fn sidecar_path(blob: &Path) -> PathBuf {
    let mut s = blob.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the parameter blob and its JSON sidecar.
pub fn save_model<M: HasTensors, S: Serialize>(path: &Path, model: &M, sidecar: &S) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, params_to_bytes(model)).map_err(|e| Error::io(path, e))?;
    let meta = sidecar_path(path);
    let json = serde_json::to_string_pretty(sidecar).map_err(|e| Error::json(&meta, e))?;
    std::fs::write(&meta, json).map_err(|e| Error::io(&meta, e))
}

/// Reads the JSON sidecar of a blob.
pub fn read_sidecar<S: DeserializeOwned>(path: &Path) -> Result<S> {
    let meta = sidecar_path(path);
    let text = std::fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&meta, e))
}

/// Restores parameters into a freshly constructed model of the right shape.
pub fn read_params_into<M: HasTensors>(path: &Path, model: &mut M) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_params(model, &mut bytes.as_slice())
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}
