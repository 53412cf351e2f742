//! Degradation channels: geometric moves, JPEG, noise, blur, crop-rescale
//! and an autoencoder surrogate; DDPM forward noising; and the mixed-set
//! builder that realizes a watermark injection ratio.
//!
//! JPEG settings are pinned: baseline encoding by `jpeg-encoder` with the
//! standard Annex K luminance/chrominance tables scaled by the IJG quality
//! formula, 4:2:0 chroma subsampling for colour input, decoding through
//! `image`. Grayscale input is encoded as a single-component JPEG.

mod diffusion;
mod mix;
mod spec;

pub use diffusion::{forward_diffuse, forward_diffuse_raw, NoiseSchedule, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_STEPS};
pub use mix::{build_mixed_set, mix_images, MixPlan, MixedItem, MIXED_MANIFEST_NAME};
pub use spec::{ChannelSpec, DEFAULT_AE_FACTOR, DEFAULT_AE_NOISE};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imagecore::{center_crop, flip_h, flip_v, from_dynamic, resize_bilinear, rot180, rot270, rot90, Image};
use crate::watermark::derive_seed;

/// Applies `spec` to `img`. Stochastic stages draw from a generator seeded
/// by `seed` (and their position in a composition), so the output is a
/// pure function of `(img, spec, seed)`.
pub fn apply_channel(img: &Image, spec: &ChannelSpec, seed: u64) -> Result<Image> {
    spec.validate()?;
    apply_validated(img, spec, seed)
}

fn apply_validated(img: &Image, spec: &ChannelSpec, seed: u64) -> Result<Image> {
    Ok(match spec {
        ChannelSpec::Identity => img.clone(),
        ChannelSpec::Rotate { deg: 90 } => rot90(img),
        ChannelSpec::Rotate { deg: 180 } => rot180(img),
        ChannelSpec::Rotate { .. } => rot270(img),
        ChannelSpec::FlipH => flip_h(img),
        ChannelSpec::FlipV => flip_v(img),
        ChannelSpec::Jpeg { quality } => jpeg_roundtrip(img, *quality)?,
        ChannelSpec::GaussianNoise { sigma } => add_noise(img, *sigma, seed),
        ChannelSpec::GaussianBlur { kernel, sigma } => gaussian_blur(img, *kernel, *sigma),
        ChannelSpec::CropScale { ratio } => {
            let (h, w) = img.dims();
            resize_bilinear(&center_crop(img, *ratio)?, h, w)?
        }
        ChannelSpec::AutoencoderSurrogate { factor, noise_sigma } => {
            let (h, w) = img.dims();
            let small = area_downsample(img, *factor);
            let back = resize_bilinear(&small, h, w)?;
            if *noise_sigma > 0.0 {
                add_noise(&back, *noise_sigma, seed)
            } else {
                back
            }
        }
        ChannelSpec::Compose(stages) => {
            let mut cur = img.clone();
            for (i, stage) in stages.iter().enumerate() {
                cur = apply_validated(&cur, stage, derive_seed(&[seed, i as u64]))?;
            }
            cur
        }
    })
}

/// Encodes at `quality` and decodes back.
pub fn jpeg_roundtrip(img: &Image, quality: u8) -> Result<Image> {
    use jpeg_encoder::{ColorType, Encoder, SamplingFactor};
    let (h, w) = img.dims();
    if h > u16::MAX as usize || w > u16::MAX as usize {
        return Err(Error::Dimension(format!("{h}x{w} exceeds the JPEG size limit")));
    }
    let raw: Vec<u8> = img.data().iter().map(|&v| crate::imagecore::quantize8(v)).collect();
    let mut bytes = Vec::new();
    let mut enc = Encoder::new(&mut bytes, quality);
    enc.set_sampling_factor(SamplingFactor::R_4_2_0);
    let color = if img.is_gray() { ColorType::Luma } else { ColorType::Rgb };
    enc.encode(&raw, w as u16, h as u16, color).map_err(|e| Error::format("jpeg", e))?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Jpeg).map_err(|e| Error::format("jpeg", e))?;
    let out = from_dynamic(decoded);
    if img.is_gray() && !out.is_gray() {
        return Ok(crate::imagecore::to_grayscale(&out));
    }
    Ok(out)
}

fn add_noise(img: &Image, sigma: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let data = img.data().iter().map(|&v| v + normal.sample(&mut rng)).collect();
    Image::from_raw_clamped(img.height(), img.width(), img.channels(), data).expect("same shape")
}

/// Index into `0..n` with reflection about the edge samples
/// (`-1 -> 1`, `n -> n - 2`).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

fn gaussian_kernel(k: usize, sigma: f64) -> Vec<f64> {
    let r = (k / 2) as f64;
    let taps: Vec<f64> = (0..k).map(|i| (-(i as f64 - r).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Convolves with a normalized `k x k` Gaussian (separable), reflect padding.
fn gaussian_blur(img: &Image, k: usize, sigma: f64) -> Image {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let taps = gaussian_kernel(k, sigma);
    let r = (k / 2) as isize;
    let src = img.data();
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                tmp[(y * w + x) * c + ch] = taps
                    .iter()
                    .enumerate()
                    .map(|(t, &wt)| wt * src[(y * w + reflect(x as isize + t as isize - r, w)) * c + ch])
                    .sum();
            }
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                out[(y * w + x) * c + ch] = taps
                    .iter()
                    .enumerate()
                    .map(|(t, &wt)| wt * tmp[(reflect(y as isize + t as isize - r, h) * w + x) * c + ch])
                    .sum();
            }
        }
    }
    Image::from_raw_clamped(h, w, c, out).expect("same shape")
}

/// Block means over `factor x factor` cells; edge cells average whatever
/// pixels they cover.
fn area_downsample(img: &Image, factor: usize) -> Image {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let (oh, ow) = (h.div_ceil(factor), w.div_ceil(factor));
    let mut out = vec![0.0; oh * ow * c];
    for by in 0..oh {
        for bx in 0..ow {
            let (y0, y1) = (by * factor, ((by + 1) * factor).min(h));
            let (x0, x1) = (bx * factor, ((bx + 1) * factor).min(w));
            let n = ((y1 - y0) * (x1 - x0)) as f64;
            for ch in 0..c {
                let mut s = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        s += img.get(y, x, ch);
                    }
                }
                out[(by * ow + bx) * c + ch] = s / n;
            }
        }
    }
    Image::from_raw_clamped(oh, ow, c, out).expect("block means stay in range")
}
