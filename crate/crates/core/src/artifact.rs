//! JSON artifact plumbing: 17-significant-digit float formatting, atomic
//! writes and the canonical hash used for reproducibility checks.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SPEC_VERSION: u32 = 1;

/// Field excluded from [`canonical_hash`].
pub const TIMESTAMPS_FIELD: &str = "timestamps";

/// Header carried by every JSON artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub spec_version: u32,
    /// Run seed, as a decimal string so 64-bit values survive JSON readers.
    pub seed: String,
}

impl Provenance {
    pub fn new(seed: u64) -> Self {
        Provenance { tool_version: TOOL_VERSION.to_string(), spec_version: SPEC_VERSION, seed: seed.to_string() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub created_unix: u64,
}

impl Timestamps {
    pub fn now() -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Timestamps { created_unix }
    }
}

/// Writes floats as `d.dddddddddddddddde±x` (17 significant digits).
struct SigFig<F>(F);

macro_rules! delegate {
    ($($name:ident $(, $arg:ident : $ty:ty)*);* $(;)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl<F: Formatter> Formatter for SigFig<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }

    delegate! {
        begin_array;
        end_array;
        begin_array_value, first: bool;
        end_array_value;
        begin_object;
        end_object;
        begin_object_key, first: bool;
        end_object_key;
        begin_object_value;
        end_object_value;
    }
}

fn serialize_with<T: Serialize + ?Sized, F: Formatter>(value: &T, f: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFig(f));
    value.serialize(&mut ser).expect("artifact types serialize infallibly");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serialize_with(value, PrettyFormatter::with_indent(b"  "));
    s.push('\n');
    s
}

pub fn to_json_compact<T: Serialize + ?Sized>(value: &T) -> String {
    serialize_with(value, CompactFormatter)
}

/// SHA-256 over the compact, key-sorted serialization with the top-level
/// `timestamps` field removed.
pub fn canonical_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("artifact types serialize infallibly");
    if let Value::Object(map) = &mut v {
        map.remove(TIMESTAMPS_FIELD);
    }
    hex::encode(Sha256::digest(to_json_compact(&v).as_bytes()))
}

/// Writes to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_pretty(value).as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(what, e))
}
