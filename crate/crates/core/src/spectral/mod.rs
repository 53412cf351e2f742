//! Frequency-domain statistics of images and corpora: centred DFT
//! magnitude, orthonormal DCT-II, single-level Haar DWT, RAPSD, streaming
//! corpus means, the CGSP container and cosine comparison of corpora.
//!
//! Every transform works on one channel. Corpus-level operations convert
//! RGB input to Rec. 601 luma first.

mod compare;
mod container;
mod corpus;
mod dct;
mod fourier;
mod haar;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use compare::{compare_corpora, compare_spectra, ComparisonReport, CosTable, DWT_AVG_NOTE};
pub use container::{read_container, read_container_file, write_container, write_container_file, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use corpus::{corpus_mean, corpus_mean_par, corpus_means, corpus_means_streamed, manifest_means, CorpusAccumulator, CorpusSpectrum};
pub use dct::{dct2, idct2};
pub use fourier::{dft_magnitude, fft2, rapsd, RapsdProfile};
pub use haar::{dwt_haar, dwt_haar_plane, idwt_haar, DwtPyramid};

pub(crate) use dct::dct2_plane;
pub(crate) use fourier::{dft_magnitude_plane, rapsd_plane};

use crate::error::{Error, Result};
use crate::imagecore::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    DftMagnitude,
    Dct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum2D {
    pub kind: SpectrumKind,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    /// DC sits at `(height / 2, width / 2)` when true, at index 0 otherwise.
    pub centered: bool,
}

impl Spectrum2D {
    /// `log(1 + v)` per bin, for plotting only.
    pub fn log1p(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.abs().ln_1p()).collect()
    }
}

/// The per-image statistic a corpus mean is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransformTag {
    #[serde(rename = "dft")]
    Dft,
    #[serde(rename = "dct")]
    Dct,
    #[serde(rename = "cA")]
    CA,
    #[serde(rename = "cH")]
    CH,
    #[serde(rename = "cV")]
    CV,
    #[serde(rename = "cD")]
    CD,
    #[serde(rename = "rapsd")]
    Rapsd,
}

impl TransformTag {
    pub const ALL: [TransformTag; 7] =
        [TransformTag::Dft, TransformTag::Dct, TransformTag::CA, TransformTag::CH, TransformTag::CV, TransformTag::CD, TransformTag::Rapsd];

    /// The six kinds compared between corpora.
    pub const COMPARED: [TransformTag; 6] =
        [TransformTag::Dft, TransformTag::Dct, TransformTag::CA, TransformTag::CH, TransformTag::CV, TransformTag::CD];

    pub fn name(self) -> &'static str {
        match self {
            TransformTag::Dft => "dft",
            TransformTag::Dct => "dct",
            TransformTag::CA => "cA",
            TransformTag::CH => "cH",
            TransformTag::CV => "cV",
            TransformTag::CD => "cD",
            TransformTag::Rapsd => "rapsd",
        }
    }

    /// Byte stored in the CGSP container.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        TransformTag::ALL.get(code as usize).copied()
    }

    /// Statistic shape for a `h x w` source image.
    pub fn output_dims(self, h: usize, w: usize) -> (usize, usize) {
        match self {
            TransformTag::Dft | TransformTag::Dct => (h, w),
            TransformTag::CA | TransformTag::CH | TransformTag::CV | TransformTag::CD => (h / 2, w / 2),
            TransformTag::Rapsd => (1, h.min(w) / 2),
        }
    }

    pub fn is_subband(self) -> bool {
        matches!(self, TransformTag::CA | TransformTag::CH | TransformTag::CV | TransformTag::CD)
    }
}

impl fmt::Display for TransformTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TransformTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown transform `{s}` (expected dft, dct, cA, cH, cV, cD or rapsd)")))
    }
}

pub(crate) fn require_gray(img: &Image, op: &str) -> Result<()> {
    if !img.is_gray() {
        return Err(Error::Dimension(format!("{op} needs a grayscale image, got {} channels", img.channels())));
    }
    Ok(())
}

/// `dot(a, b) / (|a| |b|)`, with the degenerate case (either vector all
/// zero) reported through the flag and valued 0.
pub fn cosine_similarity_flagged(a: &[f64], b: &[f64]) -> Result<(f64, bool)> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("cosine of lengths {} and {}", a.len(), b.len())));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok((0.0, true));
    }
    Ok(((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0), false))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    cosine_similarity_flagged(a, b).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_closed_forms() {
        assert!((cosine_similarity(&[3.0, -1.0, 2.0], &[3.0, -1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cosine_degenerate_and_mismatch() {
        assert_eq!(cosine_similarity_flagged(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), (0.0, true));
        assert_eq!(cosine_similarity_flagged(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), (0.0, true));
        assert!(matches!(cosine_similarity(&[1.0], &[1.0, 2.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn tag_names_roundtrip() {
        for t in TransformTag::ALL {
            assert_eq!(t.name().parse::<TransformTag>().unwrap(), t);
            assert_eq!(TransformTag::from_code(t.code()), Some(t));
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
        assert!("dwt".parse::<TransformTag>().is_err());
        assert_eq!(TransformTag::from_code(7), None);
    }
}
