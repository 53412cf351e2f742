use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Subband;
use crate::error::{Error, Result};
use crate::imagecore::{load_image, save_image, Image, ImageFormat};

/// Additive amplitude of the normalized watermark in each detail band, in
/// `[0, 1]` pixel units.
pub const DEFAULT_STRENGTH: f64 = 0.007;
/// Fraction of the host's carrier projection removed at embed time.
pub const DEFAULT_HOST_REJECTION: f64 = 1.0;
pub const DEFAULT_WATERMARK_SIZE: usize = 64;
pub const MAX_STRENGTH: f64 = 0.2;
pub const KEY_FILE_VERSION: u32 = 1;

/// The protector's secret: watermark image, carrier seed, strength and the
/// detail bands that carry the mark.
#[derive(Clone, Debug, PartialEq)]
pub struct WatermarkKey {
    watermark: Image,
    normalized: Vec<f64>,
    seed: u64,
    strength: f64,
    subbands: Vec<Subband>,
    host_rejection: f64,
    note: Option<String>,
}

impl WatermarkKey {
    pub fn new(watermark: Image, seed: u64, strength: f64, subbands: Vec<Subband>) -> Result<Self> {
        if !watermark.is_gray() {
            return Err(Error::Key("watermark must be grayscale".into()));
        }
        if !(strength > 0.0 && strength <= MAX_STRENGTH) {
            return Err(Error::Key(format!("strength {strength} outside (0, {MAX_STRENGTH}]")));
        }
        let mut bands = subbands;
        bands.sort();
        bands.dedup();
        if bands.is_empty() {
            return Err(Error::Key("no sub-bands selected".into()));
        }
        let normalized = normalize(watermark.data()).ok_or_else(|| Error::Key("watermark image is constant".into()))?;
        Ok(WatermarkKey { watermark, normalized, seed, strength, subbands: bands, host_rejection: DEFAULT_HOST_REJECTION, note: None })
    }

    /// Key with the default strength, all three detail bands and full host
    /// rejection.
    pub fn with_defaults(watermark: Image, seed: u64) -> Result<Self> {
        Self::new(watermark, seed, DEFAULT_STRENGTH, Subband::ALL.to_vec())
    }

    pub fn with_host_rejection(mut self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Key(format!("host rejection {lambda} outside [0, 1]")));
        }
        self.host_rejection = lambda;
        Ok(self)
    }

    pub fn with_strength(mut self, strength: f64) -> Result<Self> {
        if !(strength > 0.0 && strength <= MAX_STRENGTH) {
            return Err(Error::Key(format!("strength {strength} outside (0, {MAX_STRENGTH}]")));
        }
        self.strength = strength;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn watermark(&self) -> &Image {
        &self.watermark
    }

    /// Zero-mean, unit-variance copy of the watermark samples.
    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn wm_dims(&self) -> (usize, usize) {
        self.watermark.dims()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn subbands(&self) -> &[Subband] {
        &self.subbands
    }

    pub fn host_rejection(&self) -> f64 {
        self.host_rejection
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    /// Tile counts `(rows, cols)` for an image of the given size: the number
    /// of watermark copies covering each detail band.
    pub fn tile_layout(&self, height: usize, width: usize) -> (usize, usize) {
        let (wh, ww) = self.wm_dims();
        ((height / 2).div_ceil(wh), (width / 2).div_ceil(ww))
    }

    /// Hex SHA-256 prefix identifying every parameter that affects
    /// embedding or extraction. The watermark enters at 8-bit precision, the
    /// precision at which it is stored.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"coprguard-key-v1");
        h.update(self.seed.to_le_bytes());
        h.update(self.strength.to_bits().to_le_bytes());
        h.update(self.host_rejection.to_bits().to_le_bytes());
        for b in &self.subbands {
            h.update([b.code()]);
        }
        let (wh, ww) = self.wm_dims();
        h.update((wh as u64).to_le_bytes());
        h.update((ww as u64).to_le_bytes());
        let px: Vec<u8> = self.watermark.data().iter().map(|&v| (v * 255.0).round() as u8).collect();
        h.update(&px);
        hex::encode(&h.finalize()[..16])
    }

    pub fn to_file(&self, watermark_path: &str) -> KeyFile {
        KeyFile {
            version: KEY_FILE_VERSION,
            watermark_path: watermark_path.to_string(),
            seed: self.seed.to_string(),
            strength: self.strength,
            subbands: self.subbands.clone(),
            host_rejection: Some(self.host_rejection),
            note: self.note.clone(),
        }
    }

    /// Writes `path` and the watermark PNG next to it (named after the key
    /// file with a `.png` extension unless `watermark_name` is given).
    pub fn save(&self, path: &Path, watermark_name: Option<&str>) -> Result<PathBuf> {
        let default_name = format!("{}.png", path.file_stem().and_then(|s| s.to_str()).unwrap_or("watermark"));
        let name = watermark_name.unwrap_or(&default_name);
        let wm_path = path.parent().unwrap_or(Path::new("")).join(name);
        save_image(&self.watermark, &wm_path, ImageFormat::Png)?;
        crate::artifact::write_json(path, &self.to_file(name))?;
        Ok(wm_path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: KeyFile = crate::artifact::read_json(path, "key file")?;
        let base = path.parent().unwrap_or(Path::new(""));
        file.resolve(base)
    }
}

/// On-disk key. The watermark image travels as a PNG next to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyFile {
    pub version: u32,
    pub watermark_path: String,
    /// Decimal string so all 64 bits survive JSON number handling.
    pub seed: String,
    pub strength: f64,
    pub subbands: Vec<Subband>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host_rejection: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl KeyFile {
    pub fn resolve(&self, base_dir: &Path) -> Result<WatermarkKey> {
        if self.version != KEY_FILE_VERSION {
            return Err(Error::Key(format!("unsupported key file version {}", self.version)));
        }
        let seed: u64 = self.seed.parse().map_err(|_| Error::Key(format!("seed `{}` is not a u64", self.seed)))?;
        let wm_path = base_dir.join(&self.watermark_path);
        let wm = load_image(&wm_path)?;
        let wm = if wm.is_gray() { wm } else { crate::imagecore::to_grayscale(&wm) };
        let mut key = WatermarkKey::new(wm, seed, self.strength, self.subbands.clone())?
            .with_host_rejection(self.host_rejection.unwrap_or(DEFAULT_HOST_REJECTION))?;
        key.note = self.note.clone();
        Ok(key)
    }
}

pub(crate) fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var <= 1e-18 {
        return None;
    }
    let sd = var.sqrt();
    Some(v.iter().map(|x| (x - mean) / sd).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::default_watermark;

    #[test]
    fn validation() {
        let wm = default_watermark(DEFAULT_WATERMARK_SIZE);
        assert!(WatermarkKey::new(wm.clone(), 1, 0.0, Subband::ALL.to_vec()).is_err());
        assert!(WatermarkKey::new(wm.clone(), 1, 0.25, Subband::ALL.to_vec()).is_err());
        assert!(WatermarkKey::new(wm.clone(), 1, 0.02, vec![]).is_err());
        assert!(WatermarkKey::new(Image::filled(8, 8, 1, 0.5).unwrap(), 1, 0.02, vec![Subband::CD]).is_err());
        assert!(WatermarkKey::new(Image::filled(8, 8, 3, 0.5).unwrap(), 1, 0.02, vec![Subband::CD]).is_err());
        assert!(WatermarkKey::with_defaults(wm, 1).unwrap().with_host_rejection(1.5).is_err());
    }

    #[test]
    fn normalized_is_standardized() {
        let key = WatermarkKey::with_defaults(default_watermark(32), 3).unwrap();
        let n = key.normalized();
        let mean = n.iter().sum::<f64>() / n.len() as f64;
        let var = n.iter().map(|x| x * x).sum::<f64>() / n.len() as f64;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn file_roundtrip_keeps_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let key = WatermarkKey::with_defaults(default_watermark(64), u64::MAX - 5).unwrap().with_note("demo");
        let path = dir.path().join("key.json");
        key.save(&path, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"seed\": \"18446744073709551610\""), "{text}");
        assert!(text.contains("\"watermark_path\": \"key.png\""));
        let loaded = WatermarkKey::load(&path).unwrap();
        assert_eq!(loaded, key);
        assert_eq!(loaded.fingerprint(), key.fingerprint());
        assert_ne!(key.clone().with_seed(1).fingerprint(), key.fingerprint());
    }

    #[test]
    fn tile_layout() {
        let key = WatermarkKey::with_defaults(default_watermark(64), 0).unwrap();
        assert_eq!(key.tile_layout(128, 128), (1, 1));
        assert_eq!(key.tile_layout(256, 384), (2, 3));
        assert_eq!(key.tile_layout(256, 260), (2, 3));
    }
}
