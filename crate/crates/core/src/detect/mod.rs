//! Threshold calibration, per-image decisions, injection and detection
//! ratios, the one-sided excess-watermark test, and the dataset audit.

mod stats;

pub use stats::{beta_reg, hypothesis_test, t_cdf, t_quantile, TestConfig, TestOutcome, DEFAULT_KAPPA, DEFAULT_LAMBDA};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{canonical_hash, Provenance, Timestamps};
use crate::error::{Error, Result};
use crate::imagecore::{DatasetManifest, Image, Label};
use crate::watermark::{extract, EnhancementFilter, ExtractOptions, WatermarkKey};

pub const DEFAULT_MARGIN: f64 = 0.005;
pub const MIN_CALIBRATION_IMAGES: usize = 100;
pub const RECOMMENDED_CALIBRATION_IMAGES: usize = 1000;
pub const KAPPA_NOTE: &str = "kappa is the margin between the clean flag rate and the watermarked rate under the null hypothesis";

/// Quantiles use linear interpolation between order statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosQuantiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub gamma: f64,
    pub tau: f64,
    pub margin: f64,
    pub ref_corpus: String,
    pub n_ref: usize,
    pub cos_quantiles: CosQuantiles,
    pub key_fingerprint: String,
    /// Extraction settings used for the clean scores; audits must match.
    pub extraction: ExtractOptions,
    /// Canonical hash of the enhancement filter, when one was applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enhancement: Option<String>,
    pub provenance: Provenance,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos - pos.floor());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// `gamma = max(scores)`, `tau = gamma + margin`, plus summary quantiles.
pub fn threshold_from_scores(scores: &[f64], margin: f64) -> Result<(f64, f64, CosQuantiles)> {
    if scores.is_empty() {
        return Err(Error::Domain("no clean scores to calibrate on".into()));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::spec("margin", format!("must be a finite number >= 0, got {margin}")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain("clean scores contain a non-finite value".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let gamma = *sorted.last().unwrap();
    let q = CosQuantiles { p50: quantile(&sorted, 0.5), p90: quantile(&sorted, 0.9), p99: quantile(&sorted, 0.99), max: gamma };
    Ok((gamma, gamma + margin, q))
}

fn enhancement_id(enh: Option<&EnhancementFilter>) -> Option<String> {
    enh.map(canonical_hash)
}

/// Extraction COS for every image, in input order.
pub fn score_images(images: &[(String, Image)], key: &WatermarkKey, enh: Option<&EnhancementFilter>, opts: &ExtractOptions) -> Result<Vec<f64>> {
    images.par_iter().map(|(_, img)| Ok(extract(img, key, enh, opts)?.cos)).collect()
}

pub struct CalibrateOptions<'a> {
    pub margin: f64,
    pub extraction: ExtractOptions,
    pub enhancement: Option<&'a EnhancementFilter>,
    pub seed: u64,
}

impl Default for CalibrateOptions<'_> {
    fn default() -> Self {
        CalibrateOptions { margin: DEFAULT_MARGIN, extraction: ExtractOptions::default(), enhancement: None, seed: 0 }
    }
}

/// Calibrates the decision threshold on images known to be clean.
pub fn calibrate(clean: &[(String, Image)], key: &WatermarkKey, ref_corpus: &str, opts: &CalibrateOptions<'_>) -> Result<CalibrationRecord> {
    if clean.is_empty() {
        return Err(Error::Domain("calibration corpus is empty".into()));
    }
    if clean.len() < MIN_CALIBRATION_IMAGES {
        return Err(Error::Domain(format!(
            "calibration needs at least {MIN_CALIBRATION_IMAGES} clean images, got {}",
            clean.len()
        )));
    }
    if clean.len() < RECOMMENDED_CALIBRATION_IMAGES {
        log::warn!(
            "calibrating on {} images; at least {RECOMMENDED_CALIBRATION_IMAGES} are recommended for a stable threshold",
            clean.len()
        );
    }
    let scores = score_images(clean, key, opts.enhancement, &opts.extraction)?;
    let (gamma, tau, cos_quantiles) = threshold_from_scores(&scores, opts.margin)?;
    Ok(CalibrationRecord {
        gamma,
        tau,
        margin: opts.margin,
        ref_corpus: ref_corpus.to_string(),
        n_ref: clean.len(),
        cos_quantiles,
        key_fingerprint: key.fingerprint(),
        extraction: opts.extraction.clone(),
        enhancement: enhancement_id(opts.enhancement),
        provenance: Provenance::new(opts.seed),
    })
}

/// `cos > tau`, strictly.
pub fn decide_image(cos: f64, tau: f64) -> bool {
    cos > tau
}

/// Fraction of entries labelled watermarked; every entry must carry a
/// clean or watermarked label.
pub fn injection_ratio(manifest: &DatasetManifest) -> Result<f64> {
    if manifest.is_empty() {
        return Err(Error::Domain("manifest is empty".into()));
    }
    let mut marked = 0usize;
    for e in &manifest.entries {
        match e.label {
            Some(Label::Watermarked) => marked += 1,
            Some(Label::Clean) => {}
            _ => return Err(Error::Domain(format!("entry `{}` is not labelled clean or watermarked", e.id))),
        }
    }
    Ok(marked as f64 / manifest.len() as f64)
}

pub fn detection_ratio(flags: &[bool]) -> Result<f64> {
    if flags.is_empty() {
        return Err(Error::Domain("no decisions to summarize".into()));
    }
    Ok(flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Infringing,
    NotInfringing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageDecision {
    pub id: String,
    pub cos: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub per_image: Vec<ImageDecision>,
    pub n: usize,
    pub p_u: f64,
    pub tau_used: f64,
    pub config: TestConfig,
    pub statistic: f64,
    pub decision: Verdict,
    pub key_fingerprint: String,
    pub extraction: ExtractOptions,
    pub notes: Vec<String>,
    pub provenance: Provenance,
    pub timestamps: Timestamps,
}

impl DetectionReport {
    pub fn flagged(&self) -> usize {
        self.per_image.iter().filter(|d| d.flagged).count()
    }
}

/// Extracts from every suspect image, flags those above the calibrated
/// threshold and runs the excess-watermark test on the flag rate.
///
/// The calibration must come from the same key, extraction settings and
/// enhancement filter, otherwise the threshold would not bound the clean
/// scores being produced here.
pub fn audit(
    suspect: &[(String, Image)],
    key: &WatermarkKey,
    calib: &CalibrationRecord,
    cfg: &TestConfig,
    enh: Option<&EnhancementFilter>,
    opts: &ExtractOptions,
) -> Result<DetectionReport> {
    cfg.validate()?;
    let fp = key.fingerprint();
    if calib.key_fingerprint != fp {
        return Err(Error::Key(format!(
            "calibration was made for key {} but the audit key is {fp}",
            calib.key_fingerprint
        )));
    }
    if &calib.extraction != opts {
        return Err(Error::format(
            "calibration",
            format!("audit extraction options {opts:?} differ from the calibration's {:?}", calib.extraction),
        ));
    }
    if calib.enhancement != enhancement_id(enh) {
        return Err(Error::format("calibration", "audit enhancement filter differs from the one used in calibration"));
    }
    if suspect.is_empty() {
        return Err(Error::Domain("suspect set is empty".into()));
    }
    let scores = score_images(suspect, key, enh, opts)?;
    let mut per_image: Vec<ImageDecision> = suspect
        .iter()
        .zip(&scores)
        .map(|((id, _), &cos)| ImageDecision { id: id.clone(), cos, flagged: decide_image(cos, calib.tau) })
        .collect();
    per_image.sort_by(|a, b| a.id.cmp(&b.id));
    let flags: Vec<bool> = per_image.iter().map(|d| d.flagged).collect();
    let p_u = detection_ratio(&flags)?;
    let outcome = hypothesis_test(p_u, per_image.len(), cfg)?;
    Ok(DetectionReport {
        n: per_image.len(),
        per_image,
        p_u,
        tau_used: calib.tau,
        config: *cfg,
        statistic: outcome.statistic,
        decision: if outcome.reject_h0 { Verdict::Infringing } else { Verdict::NotInfringing },
        key_fingerprint: fp,
        extraction: opts.clone(),
        notes: vec![KAPPA_NOTE.to_string()],
        provenance: calib.provenance.clone(),
        timestamps: Timestamps::now(),
    })
}

/// Loads a manifest's images as `(id, image)` pairs.
pub fn load_suspects(manifest: &DatasetManifest) -> Result<Vec<(String, Image)>> {
    if manifest.is_empty() {
        return Err(Error::Domain("manifest is empty".into()));
    }
    manifest.load_images()
}
