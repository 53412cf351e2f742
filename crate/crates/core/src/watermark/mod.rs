//! Blind watermarking in the single-level Haar detail bands.
//!
//! Each selected band `B` of the luma pyramid is modulated by a balanced
//! ±1 carrier `C` keyed on `(seed, band, tile)`:
//!
//! ```text
//! B' = B + C * (s * Wn - lambda * h)
//! ```
//!
//! `Wn` is the zero-mean, unit-variance watermark tiled over the band and
//! `h` the host's own carrier projection at that watermark pixel (the mean
//! of `C * B` over every band and tile that carries it). With
//! `lambda = 0` this is plain additive spread spectrum; with `lambda = 1`
//! the host term cancels and the demodulated estimate equals `s * Wn`
//! before clamping and quantization.
//!
//! Extraction needs only the suspect image and the key: demodulate every
//! band by its carrier, average over bands and tiles, and compare with the
//! genuine watermark by cosine similarity.

mod carrier;
mod enhance;
mod key;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use enhance::{fit_enhancement, BandCorrection, EnhancementFilter, MIN_ENHANCEMENT_PAIRS};
pub use key::{KeyFile, WatermarkKey, DEFAULT_HOST_REJECTION, DEFAULT_STRENGTH, DEFAULT_WATERMARK_SIZE, KEY_FILE_VERSION, MAX_STRENGTH};

pub use carrier::derive_seed;
use carrier::CarrierBank;

use crate::error::{Error, Result};
use crate::imagecore::{crop_window, resize_plane};
use crate::imagecore::{Dihedral, Image, Plane};
use crate::spectral::{cosine_similarity, dwt_haar_plane, idwt_haar, DwtPyramid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subband {
    #[serde(rename = "cH")]
    CH,
    #[serde(rename = "cV")]
    CV,
    #[serde(rename = "cD")]
    CD,
}

impl Subband {
    pub const ALL: [Subband; 3] = [Subband::CH, Subband::CV, Subband::CD];

    pub fn code(self) -> u8 {
        match self {
            Subband::CH => 1,
            Subband::CV => 2,
            Subband::CD => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subband::CH => "cH",
            Subband::CV => "cV",
            Subband::CD => "cD",
        }
    }

    pub(crate) fn of(self, p: &DwtPyramid) -> &Plane {
        match self {
            Subband::CH => &p.ch,
            Subband::CV => &p.cv,
            Subband::CD => &p.cd,
        }
    }

    pub(crate) fn of_mut(self, p: &mut DwtPyramid) -> &mut Plane {
        match self {
            Subband::CH => &mut p.ch,
            Subband::CV => &mut p.cv,
            Subband::CD => &mut p.cd,
        }
    }
}

impl fmt::Display for Subband {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subband {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subband::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Key(format!("unknown sub-band `{s}` (expected cH, cV or cD)")))
    }
}

fn check_capacity(h: usize, w: usize, key: &WatermarkKey) -> Result<()> {
    if !h.is_multiple_of(2) || !w.is_multiple_of(2) {
        return Err(Error::Dimension(format!("watermarking needs even dimensions, got {h}x{w}")));
    }
    let (wh, ww) = key.wm_dims();
    if h < 2 * wh || w < 2 * ww {
        return Err(Error::Size(format!("{h}x{w} image cannot hold one {wh}x{ww} watermark tile (needs {}x{})", 2 * wh, 2 * ww)));
    }
    Ok(())
}

fn bank_for(key: &WatermarkKey, band_h: usize, band_w: usize) -> CarrierBank {
    let (wh, ww) = key.wm_dims();
    CarrierBank::new(key.seed(), key.subbands(), band_h, band_w, wh, ww)
}

/// Mean of `C * B` per watermark pixel over the valid positions of every
/// selected band; positions with no valid sample stay 0.
fn demodulate(pyr: &DwtPyramid, key: &WatermarkKey, bank: &CarrierBank, mask: Option<&[bool]>) -> (Vec<f64>, Vec<usize>) {
    let (wh, ww) = key.wm_dims();
    let mut acc = vec![0.0; wh * ww];
    let mut count = vec![0usize; wh * ww];
    for (band, chips) in key.subbands().iter().zip(&bank.chips) {
        let coeffs = &band.of(pyr).data;
        for i in 0..bank.band_h {
            for j in 0..bank.band_w {
                let k = i * bank.band_w + j;
                if mask.is_some_and(|m| !m[k]) {
                    continue;
                }
                let q = bank.wm_index(i, j);
                acc[q] += chips[k] * coeffs[k];
                count[q] += 1;
            }
        }
    }
    for (a, &c) in acc.iter_mut().zip(&count) {
        if c > 0 {
            *a /= c as f64;
        }
    }
    (acc, count)
}

/// Luma change that embeds the key into `luma`.
pub fn embedding_delta(luma: &Plane, key: &WatermarkKey) -> Result<Plane> {
    let (h, w) = luma.dims();
    check_capacity(h, w, key)?;
    let pyr = dwt_haar_plane(luma)?;
    let (bh, bw) = pyr.band_dims();
    let bank = bank_for(key, bh, bw);
    let (host, _) = demodulate(&pyr, key, &bank, None);
    let wn = key.normalized();
    let (s, lambda) = (key.strength(), key.host_rejection());
    let mut delta = DwtPyramid { ca: Plane::zeros(bh, bw), ch: Plane::zeros(bh, bw), cv: Plane::zeros(bh, bw), cd: Plane::zeros(bh, bw) };
    for (band, chips) in key.subbands().iter().zip(&bank.chips) {
        let out = band.of_mut(&mut delta);
        for i in 0..bh {
            for j in 0..bw {
                let k = i * bw + j;
                let q = bank.wm_index(i, j);
                out.data[k] = chips[k] * (s * wn[q] - lambda * host[q]);
            }
        }
    }
    idwt_haar(&delta)
}

/// Embeds the key in the luma of `img`. RGB images receive the same change
/// on every channel, which leaves chroma differences intact. The result is
/// clamped to `[0, 1]`.
pub fn embed(img: &Image, key: &WatermarkKey) -> Result<Image> {
    let delta = embedding_delta(&img.luma_plane(), key)?;
    img.add_luma_delta_clamped(&delta)
}

/// Geometry at which an estimate was taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub dihedral: Dihedral,
    /// Centre-crop ratio that was undone, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_ratio: Option<f64>,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { dihedral: Dihedral::Identity, crop_ratio: None };
}

/// Extraction settings beyond the key.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Try all eight dihedral poses of the input and keep the best.
    pub orientation_search: bool,
    /// Centre-crop-and-rescale ratios to undo, tried in addition to the
    /// image as given.
    #[serde(default)]
    pub crop_search: Vec<f64>,
}

impl ExtractOptions {
    pub fn with_orientation_search() -> Self {
        ExtractOptions { orientation_search: true, crop_search: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        for &r in &self.crop_search {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Domain(format!("crop search ratio {r} outside (0, 1)")));
            }
        }
        Ok(())
    }

    fn poses(&self) -> Vec<Pose> {
        let dihedrals: &[Dihedral] = if self.orientation_search { &Dihedral::ALL } else { &[Dihedral::Identity] };
        let crops = std::iter::once(None).chain(self.crop_search.iter().map(|&r| Some(r))).collect::<Vec<_>>();
        dihedrals.iter().flat_map(|&d| crops.iter().map(move |&c| Pose { dihedral: d, crop_ratio: c })).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractedWatermark {
    pub height: usize,
    pub width: usize,
    /// Zero-mean watermark estimate, row-major.
    pub estimate: Vec<f64>,
    /// Cosine similarity between the estimate and the key's watermark.
    pub cos: f64,
    pub pose: Pose,
    /// Watermark copies averaged per band.
    pub tiles: usize,
}

impl ExtractedWatermark {
    /// The estimate rescaled to `[0, 1]` for viewing.
    pub fn to_image(&self) -> Image {
        let max = self.estimate.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if max > 0.0 { 0.5 / max } else { 0.0 };
        let data = self.estimate.iter().map(|v| 0.5 + v * scale).collect();
        Image::from_raw_clamped(self.height, self.width, 1, data).expect("estimate matches watermark dims")
    }
}

fn extract_luma(luma: &Plane, key: &WatermarkKey, enh: Option<&EnhancementFilter>, mask: Option<&[bool]>, pose: Pose) -> Result<ExtractedWatermark> {
    let (h, w) = luma.dims();
    check_capacity(h, w, key)?;
    let mut pyr = dwt_haar_plane(luma)?;
    if let Some(f) = enh {
        f.apply(&mut pyr);
    }
    let (bh, bw) = pyr.band_dims();
    let bank = bank_for(key, bh, bw);
    let (mut est, count) = demodulate(&pyr, key, &bank, mask);
    let covered: Vec<usize> = (0..est.len()).filter(|&q| count[q] > 0).collect();
    let mean = covered.iter().map(|&q| est[q]).sum::<f64>() / covered.len().max(1) as f64;
    for &q in &covered {
        est[q] -= mean;
    }
    let cos = cosine_similarity(&est, key.normalized())?;
    let (wh, ww) = key.wm_dims();
    Ok(ExtractedWatermark { height: wh, width: ww, estimate: est, cos, pose, tiles: bank.tiles() })
}

/// Luma of `img` after undoing a centre crop of `ratio` that was rescaled
/// back to full size, placed on a full-size canvas, plus the mask of detail
/// coefficients whose 2x2 support lies inside the recovered window.
fn uncrop(luma: &Plane, ratio: f64) -> (Plane, Vec<bool>) {
    let (h, w) = luma.dims();
    let (ch, cw, oy, ox) = crop_window(h, w, ratio);
    let small = resize_plane(luma, ch, cw);
    let mut canvas = Plane::zeros(h, w);
    for y in 0..ch {
        for x in 0..cw {
            *canvas.at_mut(y + oy, x + ox) = small.at(y, x);
        }
    }
    let (bh, bw) = (h / 2, w / 2);
    let mut mask = vec![false; bh * bw];
    for i in 0..bh {
        for j in 0..bw {
            mask[i * bw + j] = 2 * i >= oy && 2 * i + 1 < oy + ch && 2 * j >= ox && 2 * j + 1 < ox + cw;
        }
    }
    (canvas, mask)
}

/// Blind extraction. With a search configured, every candidate pose is
/// tried and the one whose estimate best matches the key's watermark wins.
pub fn extract(img: &Image, key: &WatermarkKey, enh: Option<&EnhancementFilter>, opts: &ExtractOptions) -> Result<ExtractedWatermark> {
    opts.validate()?;
    if let Some(f) = enh {
        f.check_key(key)?;
    }
    let mut best: Option<ExtractedWatermark> = None;
    let mut first_err = None;
    for pose in opts.poses() {
        let posed = pose.dihedral.apply(img);
        let luma = posed.luma_plane();
        let attempt = match pose.crop_ratio {
            None => extract_luma(&luma, key, enh, None, pose),
            Some(r) => {
                let (canvas, mask) = uncrop(&luma, r);
                extract_luma(&canvas, key, enh, Some(&mask), pose)
            }
        };
        match attempt {
            Ok(e) => {
                if best.as_ref().is_none_or(|b| e.cos > b.cos) {
                    best = Some(e);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one pose is always tried"))
}
