//! Hashing and seed-derivation helpers shared across stages.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Short stable hash of a serializable value (canonical field order comes
/// from the struct definition).
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable config");
    let digest = Sha256::digest(&json);
    to_hex(&digest[..8])
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    to_hex(&digest[..8])
}

/// Expands one global seed into a per-stage seed.
///
/// seed_for(stage, g) = first 8 LE bytes of SHA-256(g_le_bytes || stage).
/// Stages are addressed by name ("timbre", "flow", "system-3", ...), so a
/// partial rerun of any stage sees the same seed as the full pipeline.
pub fn seed_for(stage: &str, global_seed: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
