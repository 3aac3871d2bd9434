//! Versioned state blobs.
//!
//! Every stateful component serializes to a small JSON envelope carrying a
//! format tag, a schema version and a component kind. Floats are written in
//! shortest round-trip form, so `from_bytes(to_bytes(s)) == s` bit for bit.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SadError};

pub const STATE_FORMAT: &str = "streamad-state";
pub const STATE_VERSION: u32 = 1;

/// A component whose state can be saved and restored.
pub trait Persist: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format: &'a str,
    version: u32,
    kind: &'a str,
    state: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    format: String,
    version: u32,
    kind: String,
    state: T,
}

pub fn to_bytes<T: Persist>(state: &T) -> Result<Vec<u8>> {
    serde_json::to_vec(&EnvelopeOut {
        format: STATE_FORMAT,
        version: STATE_VERSION,
        kind: T::KIND,
        state,
    })
    .map_err(|e| SadError::Serialization(e.to_string()))
}

pub fn from_bytes<T: Persist>(bytes: &[u8]) -> Result<T> {
    let env: EnvelopeIn<T> =
        serde_json::from_slice(bytes).map_err(|e| SadError::Serialization(e.to_string()))?;
    if env.format != STATE_FORMAT {
        return Err(SadError::Serialization(format!(
            "unknown format tag {:?}",
            env.format
        )));
    }
    if env.version != STATE_VERSION {
        return Err(SadError::Serialization(format!(
            "unsupported state version {} (expected {STATE_VERSION})",
            env.version
        )));
    }
    if env.kind != T::KIND {
        return Err(SadError::Serialization(format!(
            "state kind {:?} does not match {:?}",
            env.kind,
            T::KIND
        )));
    }
    Ok(env.state)
}
