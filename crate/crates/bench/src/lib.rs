//! Shared fixtures for the benchmarks.

use coprguard_core::synth::{default_watermark, natural_image};
use coprguard_core::watermark::WatermarkKey;
use coprguard_core::Image;

pub const SIZES: [usize; 3] = [64, 128, 256];

pub fn image(size: usize) -> Image {
    natural_image(7, size, size)
}

pub fn key() -> WatermarkKey {
    WatermarkKey::with_defaults(default_watermark(64), 1234).expect("default key")
}
