//! Per-band affine restoration fitted on simulated degradation pairs.

use serde::{Deserialize, Serialize};

use super::{extract, ExtractOptions, Subband, WatermarkKey};
use crate::error::{Error, Result};
use crate::imagecore::Image;
use crate::spectral::{dwt_haar_plane, DwtPyramid};

pub const MIN_ENHANCEMENT_PAIRS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandCorrection {
    pub band: Subband,
    pub gain: f64,
    pub bias: f64,
    /// Mean squared error of the fit.
    pub residual: f64,
}

/// Maps degraded detail coefficients back towards their pristine values,
/// `c' = gain * c + bias` per band, before demodulation.
///
/// A filter that lowered the mean extraction similarity on its own fitting
/// pairs is marked `discarded` and then acts as the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancementFilter {
    pub bands: Vec<BandCorrection>,
    pub fitted_on: String,
    pub key_fingerprint: String,
    pub n_pairs: usize,
    /// Mean extraction cosine on the fitting pairs without / with the filter.
    pub train_cos_without: f64,
    pub train_cos_with: f64,
    pub discarded: bool,
}

impl EnhancementFilter {
    pub fn is_active(&self) -> bool {
        !self.discarded
    }

    pub(crate) fn check_key(&self, key: &WatermarkKey) -> Result<()> {
        if self.key_fingerprint != key.fingerprint() {
            return Err(Error::Key(format!(
                "enhancement filter fitted for key {} used with key {}",
                self.key_fingerprint,
                key.fingerprint()
            )));
        }
        Ok(())
    }

    pub(crate) fn apply(&self, pyr: &mut DwtPyramid) {
        if self.discarded {
            return;
        }
        apply_bands(&self.bands, pyr);
    }
}

fn apply_bands(bands: &[BandCorrection], pyr: &mut DwtPyramid) {
    for b in bands {
        for v in &mut b.band.of_mut(pyr).data {
            *v = b.gain * *v + b.bias;
        }
    }
}

/// Ordinary least squares of pristine on degraded coefficients, per band.
fn fit_band(band: Subband, pairs: &[(DwtPyramid, DwtPyramid)]) -> Result<BandCorrection> {
    let (mut n, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (d, p) in pairs {
        for (x, y) in band.of(d).data.iter().zip(&band.of(p).data) {
            n += 1.0;
            sx += x;
            sy += y;
        }
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (d, p) in pairs {
        for (x, y) in band.of(d).data.iter().zip(&band.of(p).data) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
    }
    if sxx / n <= 1e-20 {
        return Err(Error::SingularFit(format!("degraded {band} coefficients are constant")));
    }
    let gain = sxy / sxx;
    let bias = my - gain * mx;
    let mut sse = 0.0;
    for (d, p) in pairs {
        for (x, y) in band.of(d).data.iter().zip(&band.of(p).data) {
            sse += (y - gain * x - bias).powi(2);
        }
    }
    Ok(BandCorrection { band, gain, bias, residual: sse / n })
}

/// Fits one affine correction per selected band from `(degraded, pristine)`
/// pairs, where pristine is a watermarked image and degraded the same image
/// after a channel.
pub fn fit_enhancement(pairs: &[(Image, Image)], key: &WatermarkKey, fitted_on: &str) -> Result<EnhancementFilter> {
    if pairs.len() < MIN_ENHANCEMENT_PAIRS {
        return Err(Error::Domain(format!("enhancement fit needs at least {MIN_ENHANCEMENT_PAIRS} pairs, got {}", pairs.len())));
    }
    let pyramids: Vec<(DwtPyramid, DwtPyramid)> = pairs
        .iter()
        .map(|(d, p)| {
            if d.dims() != p.dims() {
                return Err(Error::Dimension("degraded and pristine images differ in size".into()));
            }
            Ok((dwt_haar_plane(&d.luma_plane())?, dwt_haar_plane(&p.luma_plane())?))
        })
        .collect::<Result<_>>()?;
    let bands = key.subbands().iter().map(|&b| fit_band(b, &pyramids)).collect::<Result<Vec<_>>>()?;

    let mut filter = EnhancementFilter {
        bands,
        fitted_on: fitted_on.to_string(),
        key_fingerprint: key.fingerprint(),
        n_pairs: pairs.len(),
        train_cos_without: 0.0,
        train_cos_with: 0.0,
        discarded: false,
    };
    let opts = ExtractOptions::default();
    let (mut without, mut with) = (0.0, 0.0);
    for (d, _) in pairs {
        without += extract(d, key, None, &opts)?.cos;
        with += extract(d, key, Some(&filter), &opts)?.cos;
    }
    filter.train_cos_without = without / pairs.len() as f64;
    filter.train_cos_with = with / pairs.len() as f64;
    filter.discarded = filter.train_cos_with < filter.train_cos_without;
    Ok(filter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{default_watermark, natural_image};
    use crate::watermark::embed;

    fn scaled(img: &Image, f: f64) -> Image {
        Image::new(img.height(), img.width(), img.channels(), img.data().iter().map(|v| v * f).collect()).unwrap()
    }

    fn pristine(n: usize, key: &WatermarkKey) -> Vec<Image> {
        (0..n).map(|i| embed(&natural_image(100 + i as u64, 64, 64), key).unwrap()).collect()
    }

    #[test]
    fn identity_channel_fits_identity() {
        let key = WatermarkKey::with_defaults(default_watermark(32), 5).unwrap();
        let pairs: Vec<(Image, Image)> = pristine(8, &key).into_iter().map(|p| (p.clone(), p)).collect();
        let f = fit_enhancement(&pairs, &key, "identity").unwrap();
        for b in &f.bands {
            assert!((b.gain - 1.0).abs() < 1e-9 && b.bias.abs() < 1e-9 && b.residual < 1e-18, "{b:?}");
        }
        assert!(!f.discarded);
    }

    #[test]
    fn halved_channel_fits_gain_two() {
        let key = WatermarkKey::with_defaults(default_watermark(32), 5).unwrap();
        let pairs: Vec<(Image, Image)> = pristine(8, &key).into_iter().map(|p| (scaled(&p, 0.5), p)).collect();
        let f = fit_enhancement(&pairs, &key, "half").unwrap();
        for b in &f.bands {
            assert!((b.gain - 2.0).abs() < 1e-6, "{b:?}");
        }
    }

    #[test]
    fn errors() {
        let key = WatermarkKey::with_defaults(default_watermark(32), 5).unwrap();
        let few: Vec<(Image, Image)> = pristine(3, &key).into_iter().map(|p| (p.clone(), p)).collect();
        assert!(matches!(fit_enhancement(&few, &key, "x"), Err(Error::Domain(_))));
        let flat = Image::filled(64, 64, 1, 0.5).unwrap();
        let pairs: Vec<(Image, Image)> = pristine(8, &key).into_iter().map(|p| (flat.clone(), p)).collect();
        assert!(matches!(fit_enhancement(&pairs, &key, "flat"), Err(Error::SingularFit(_))));
    }
}
