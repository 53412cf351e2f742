//! Counter-based ±1 carriers. Each `(seed, band, tile)` triple seeds its
//! own generator, so carriers never depend on evaluation order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Subband;

#[inline]
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_C0DE_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// One balanced carrier tile: exactly `floor(n/2)` entries are -1 and the
/// rest +1, in a key-dependent order.
pub(crate) fn carrier_tile(seed: u64, band: Subband, tile_y: usize, tile_x: usize, len: usize) -> Vec<f64> {
    let mut chips: Vec<f64> = (0..len).map(|i| if i < len / 2 { -1.0 } else { 1.0 }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, band.code() as u64, tile_y as u64, tile_x as u64]));
    chips.shuffle(&mut rng);
    chips
}

/// All carrier values for the selected bands over a `band_h x band_w`
/// sub-band grid tiled by `wm_h x wm_w` watermark copies.
pub(crate) struct CarrierBank {
    pub band_h: usize,
    pub band_w: usize,
    pub wm_h: usize,
    pub wm_w: usize,
    /// One full-grid carrier per selected band, row-major.
    pub chips: Vec<Vec<f64>>,
}

impl CarrierBank {
    pub fn new(seed: u64, bands: &[Subband], band_h: usize, band_w: usize, wm_h: usize, wm_w: usize) -> Self {
        let ty = band_h.div_ceil(wm_h);
        let tx = band_w.div_ceil(wm_w);
        let chips = bands
            .iter()
            .map(|&b| {
                let tiles: Vec<Vec<f64>> = (0..ty * tx).map(|t| carrier_tile(seed, b, t / tx, t % tx, wm_h * wm_w)).collect();
                let mut grid = vec![0.0; band_h * band_w];
                for i in 0..band_h {
                    for j in 0..band_w {
                        let tile = &tiles[(i / wm_h) * tx + j / wm_w];
                        grid[i * band_w + j] = tile[(i % wm_h) * wm_w + j % wm_w];
                    }
                }
                grid
            })
            .collect();
        CarrierBank { band_h, band_w, wm_h, wm_w, chips }
    }

    /// Watermark pixel index that sub-band position `(i, j)` carries.
    #[inline]
    pub fn wm_index(&self, i: usize, j: usize) -> usize {
        (i % self.wm_h) * self.wm_w + j % self.wm_w
    }

    pub fn tiles(&self) -> usize {
        self.band_h.div_ceil(self.wm_h) * self.band_w.div_ceil(self.wm_w)
    }
}
