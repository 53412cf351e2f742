use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{load_image, Image};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Clean,
    Watermarked,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    /// Per-entry provenance (for example embed quality metrics).
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl ManifestEntry {
    pub fn new(id: impl Into<String>, path: impl Into<String>, label: Option<Label>) -> Self {
        ManifestEntry { id: id.into(), path: path.into(), label, extra: BTreeMap::new() }
    }
}

/// A list of images with optional ground-truth labels.
///
/// Relative entry paths resolve against `root`; a relative `root` (or a
/// missing one) resolves against the directory holding the manifest file.
/// Unknown top-level fields are kept in `meta` so derived manifests can
/// carry provenance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<String>,
    pub entries: Vec<ManifestEntry>,
    #[serde(flatten)]
    pub meta: BTreeMap<String, Value>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(root: Option<String>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = DatasetManifest { root, entries, meta: BTreeMap::new(), base_dir: PathBuf::from(".") };
        m.validate()?;
        Ok(m)
    }

    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: DatasetManifest = serde_json::from_str(text).map_err(|e| Error::format("manifest", e))?;
        m.base_dir = base_dir.into();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::format("manifest", format!("duplicate id `{}`", e.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn set_base_dir(&mut self, dir: impl Into<PathBuf>) {
        self.base_dir = dir.into();
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            return p.to_path_buf();
        }
        let root = match &self.root {
            Some(r) if Path::new(r).is_absolute() => PathBuf::from(r),
            Some(r) => self.base_dir.join(r),
            None => self.base_dir.clone(),
        };
        root.join(p)
    }

    /// Fails with an I/O error naming the first entry whose file is absent.
    pub fn check_paths(&self) -> Result<()> {
        for e in &self.entries {
            let p = self.resolve(e);
            if !p.is_file() {
                return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "manifest entry not found")));
            }
        }
        Ok(())
    }

    /// Loads every entry in parallel, preserving manifest order.
    pub fn load_images(&self) -> Result<Vec<(String, Image)>> {
        self.entries
            .par_iter()
            .map(|e| Ok((e.id.clone(), load_image(self.resolve(e))?)))
            .collect()
    }

    pub fn to_json_pretty(&self) -> String {
        crate::artifact::to_json_pretty(self)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::artifact::write_atomic(path.as_ref(), self.to_json_pretty().as_bytes())
    }
}
