//! Image representation, file I/O, colour conversion, geometric primitives
//! and full-reference quality metrics.
//!
//! Pixels are `f64` samples in `[0, 1]`, stored row-major with channels
//! interleaved (`data[(y * width + x) * channels + c]`). Quantization to
//! 8 bits happens only at file boundaries.

mod geometry;
mod io;
mod manifest;
mod metrics;

pub(crate) use geometry::{crop_window, resize_plane};
pub(crate) use io::{from_dynamic, quantize8};
pub use geometry::{center_crop, flip_h, flip_v, geometric, resize_bilinear, rot180, rot270, rot90, Dihedral, Geometric};
pub use io::{load_image, save_image, ImageFormat};
pub use manifest::{DatasetManifest, Label, ManifestEntry};
pub use metrics::{psnr, ssim, PSNR_IDENTICAL, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};

use crate::error::{Error, Result};

/// Rec. 601 luma weights for R, G and B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from interleaved samples. Samples outside `[0, 1]`
    /// (or NaN) are rejected; use [`Image::from_raw_clamped`] to clamp.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(height, width, channels, data.len())?;
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("sample {bad} outside [0, 1]")));
        }
        Ok(Image { height, width, channels, data })
    }

    /// Builds an image, clamping every sample into `[0, 1]`. NaN maps to 0.
    pub fn from_raw_clamped(height: usize, width: usize, channels: usize, mut data: Vec<f64>) -> Result<Self> {
        check_shape(height, width, channels, data.len())?;
        for v in &mut data {
            *v = clamp01(*v);
        }
        Ok(Image { height, width, channels, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Single-channel image from a [`Plane`], clamped.
    pub fn from_plane_clamped(plane: &Plane) -> Self {
        Image {
            height: plane.height,
            width: plane.width,
            channels: 1,
            data: plane.data.iter().map(|&v| clamp01(v)).collect(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Copies one channel out as a plane.
    pub fn channel_plane(&self, c: usize) -> Plane {
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Plane { height: self.height, width: self.width, data }
    }

    /// The luma plane (the single channel for grayscale input).
    /// The image as it would read back from 8-bit storage.
    pub fn quantized8(&self) -> Image {
        let data = self.data.iter().map(|&v| io::quantize8(v) as f64 / 255.0).collect();
        Image::from_parts_unchecked(self.height, self.width, self.channels, data)
    }

    pub fn luma_plane(&self) -> Plane {
        if self.channels == 1 {
            return Plane { height: self.height, width: self.width, data: self.data.clone() };
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
            .collect();
        Plane { height: self.height, width: self.width, data }
    }

    /// Adds `delta` to every channel of each pixel and clamps. For RGB this
    /// shifts luma by exactly `delta` (before clamping) and leaves the
    /// colour differences untouched.
    pub fn add_luma_delta_clamped(&self, delta: &Plane) -> Result<Image> {
        if delta.dims() != self.dims() {
            return Err(Error::Dimension(format!(
                "delta {}x{} vs image {}x{}",
                delta.height, delta.width, self.height, self.width
            )));
        }
        let c = self.channels;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| clamp01(v + delta.data[i / c]))
            .collect();
        Ok(Image { height: self.height, width: self.width, channels: c, data })
    }

    pub(crate) fn from_parts_unchecked(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(height * width * channels, data.len());
        Image { height, width, channels, data }
    }
}

fn check_shape(height: usize, width: usize, channels: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::Dimension(format!("empty image {height}x{width}")));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::Dimension(format!("{channels} channels, expected 1 or 3")));
    }
    if height * width * channels != len {
        return Err(Error::Dimension(format!(
            "{height}x{width}x{channels} needs {} samples, got {len}",
            height * width * channels
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Luma conversion. Grayscale input is returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.is_gray() {
        return img.clone();
    }
    let p = img.luma_plane();
    Image::from_plane_clamped(&p)
}

/// Unbounded real-valued 2-D array, row-major. Used for luma deltas,
/// sub-bands and spectra where values leave `[0, 1]`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Plane {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(height: usize, width: usize) -> Self {
        Plane { height, width, data: vec![0.0; height * width] }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height * width != data.len() {
            return Err(Error::Dimension(format!("{height}x{width} plane needs {} values, got {}", height * width, data.len())));
        }
        Ok(Plane { height, width, data })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, y: usize, x: usize) -> &mut f64 {
        &mut self.data[y * self.width + x]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}
