use std::path::Path;

use image::{DynamicImage, ImageError, ImageReader};

use super::Image;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    /// Binary PPM (P6) for RGB, PGM (P5) for grayscale.
    Ppm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "png" => Some(ImageFormat::Png),
            "ppm" | "pgm" | "pnm" => Some(ImageFormat::Ppm),
            _ => None,
        }
    }
}

fn map_image_error(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::IoError(io) => Error::io(path, io),
        ImageError::Unsupported(u) => Error::format(format!("{:?}", u.format_hint()), u),
        other => Error::format(path.display().to_string(), other),
    }
}

/// Reads PNG, PPM/PGM or JPEG. 8-bit samples map to `v / 255`, 16-bit to
/// `v / 65535`. Alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format().is_none() {
        return Err(Error::format("unknown", format!("{} is not a recognised raster", path.display())));
    }
    let decoded = reader.decode().map_err(|e| map_image_error(path, e))?;
    Ok(from_dynamic(decoded))
}

pub(crate) fn from_dynamic(img: DynamicImage) -> Image {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let color = img.color();
    let gray = !color.has_color();
    let sixteen = color.bytes_per_pixel() / color.channel_count() >= 2;
    let (channels, data): (usize, Vec<f64>) = match (gray, sixteen) {
        (true, false) => (1, img.into_luma8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()),
        (true, true) => (1, img.into_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()),
        (false, false) => (3, img.into_rgb8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()),
        (false, true) => (3, img.into_rgb16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()),
    };
    Image::from_parts_unchecked(h, w, channels, data)
}

#[inline]
pub(crate) fn quantize8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

pub(crate) fn to_dynamic8(img: &Image) -> DynamicImage {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let raw: Vec<u8> = img.data().iter().map(|&v| quantize8(v)).collect();
    if img.is_gray() {
        DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, raw).expect("buffer size"))
    } else {
        DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, raw).expect("buffer size"))
    }
}

/// Writes 8-bit samples quantized by `round(v * 255)`.
pub fn save_image(img: &Image, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let dynamic = to_dynamic8(img);
    let mut bytes = Vec::new();
    let written = match format {
        ImageFormat::Png => dynamic.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png),
        ImageFormat::Ppm => {
            use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
            use image::ImageEncoder;
            let subtype = if img.is_gray() {
                PnmSubtype::Graymap(SampleEncoding::Binary)
            } else {
                PnmSubtype::Pixmap(SampleEncoding::Binary)
            };
            PnmEncoder::new(&mut bytes).with_subtype(subtype).write_image(
                dynamic.as_bytes(),
                img.width() as u32,
                img.height() as u32,
                dynamic.color().into(),
            )
        }
    };
    written.map_err(|e| map_image_error(path, e))?;
    crate::artifact::write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::Image;

    #[test]
    fn white_png_loads_as_ones() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.png");
        image::RgbImage::from_pixel(2, 2, image::Rgb([255, 255, 255])).save(&p).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.channels(), 3);
        assert!(img.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sixteen_bit_png_scales_by_65535() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g16.png");
        image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 1, vec![65535u16, 32768]).unwrap().save(&p).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.channels(), 1);
        assert_eq!(img.data()[0], 1.0);
        assert!((img.data()[1] - 32768.0 / 65535.0).abs() < 1e-15);
    }

    #[test]
    fn half_quantizes_to_128() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.png");
        save_image(&Image::filled(3, 3, 1, 0.5).unwrap(), &p, ImageFormat::Png).unwrap();
        let raw = image::open(&p).unwrap().into_luma8();
        assert!(raw.pixels().all(|px| px.0[0] == 128));
    }

    #[test]
    fn ppm_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.ppm");
        let data: Vec<f64> = (0..12).map(|i| (i * 20) as f64 / 255.0).collect();
        let img = Image::new(2, 2, 3, data).unwrap();
        save_image(&img, &p, ImageFormat::Ppm).unwrap();
        let head = std::fs::read(&p).unwrap();
        assert_eq!(&head[..2], b"P6");
        assert_eq!(load_image(&p).unwrap(), img);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_image("/definitely/not/here.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn garbage_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.bin");
        std::fs::write(&p, b"not an image at all").unwrap();
        assert!(matches!(load_image(&p).unwrap_err(), Error::Format { .. }));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let img = Image::filled(2, 2, 1, 0.0).unwrap();
        let err = save_image(&img, "/nonexistent-dir/x.png", ImageFormat::Png).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
