//! Deterministic synthetic corpora: natural-looking photographs with a
//! power-law spectrum and soft-edged objects, white noise, and the default
//! watermark logo. Used by tests, benchmarks and the `synth` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::imagecore::Image;
use crate::watermark::derive_seed;

/// Amplitude falls as `f^-1.5` (power as `f^-3`), the steep end of the
/// range measured for photographs of faces and indoor scenes.
const SPECTRAL_EXPONENT: f64 = 1.5;
const FIELD_STD: f64 = 0.12;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(&[seed, stream]))
}

fn freq(i: usize, n: usize) -> f64 {
    let k = if i <= (n - 1) / 2 { i as f64 } else { i as f64 - n as f64 };
    k / n as f64
}

fn ifft2_real(mut buf: Vec<Complex<f64>>, h: usize, w: usize) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let row = planner.plan_fft_inverse(w);
    for r in buf.chunks_exact_mut(w) {
        row.process(r);
    }
    let col = planner.plan_fft_inverse(h);
    let mut column = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = buf[y * w + x];
        }
        col.process(&mut column);
        for y in 0..h {
            buf[y * w + x] = column[y];
        }
    }
    buf.into_iter().map(|c| c.re).collect()
}

/// Random-phase field with `|F| ~ f^-exponent`, normalized to zero mean
/// and unit variance.
fn power_law_field(rng: &mut ChaCha8Rng, h: usize, w: usize, exponent: f64) -> Vec<f64> {
    let mut spec = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let f = (freq(y, h).powi(2) + freq(x, w).powi(2)).sqrt();
            let amp = if f == 0.0 { 0.0 } else { f.powf(-exponent) };
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            spec.push(Complex::new(re * amp, im * amp));
        }
    }
    let field = ifft2_real(spec, h, w);
    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    let sd = (field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
    field.into_iter().map(|v| (v - mean) / sd).collect()
}

/// An RGB `h x w` image with natural-image statistics, fully determined by
/// `seed`.
pub fn natural_image(seed: u64, h: usize, w: usize) -> Image {
    let mut rng = rng_for(seed, 1);
    let field = power_law_field(&mut rng, h, w, SPECTRAL_EXPONENT);
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.06..0.06));
    let mut planes: Vec<Vec<f64>> = (0..3).map(|c| field.iter().map(|v| 0.5 + FIELD_STD * v + tint[c]).collect()).collect();

    let objects = rng.random_range(3..8);
    for _ in 0..objects {
        let cy = rng.random_range(0.0..h as f64);
        let cx = rng.random_range(0.0..w as f64);
        let ry = rng.random_range(0.06..0.3) * h as f64;
        let rx = rng.random_range(0.06..0.3) * w as f64;
        let level: f64 = rng.random_range(-0.3..0.3);
        let colour: [f64; 3] = std::array::from_fn(|_| level * (1.0 + rng.random_range(-0.3..0.3)));
        let sharpness = rng.random_range(8.0..30.0);
        for y in 0..h {
            for x in 0..w {
                let d = (((y as f64 - cy) / ry).powi(2) + ((x as f64 - cx) / rx).powi(2)).sqrt();
                let m = 1.0 / (1.0 + ((d - 1.0) * sharpness).exp());
                for (c, p) in planes.iter_mut().enumerate() {
                    p[y * w + x] += colour[c] * m;
                }
            }
        }
    }
    let mut data = Vec::with_capacity(h * w * 3);
    for i in 0..h * w {
        for p in &planes {
            data.push(p[i].clamp(0.02, 0.98));
        }
    }
    Image::new(h, w, 3, data).expect("samples clamped into range")
}

/// I.i.d. uniform `[0, 1]` RGB noise.
pub fn noise_image(seed: u64, h: usize, w: usize) -> Image {
    let mut rng = rng_for(seed, 2);
    let data = (0..h * w * 3).map(|_| rng.random::<f64>()).collect();
    Image::new(h, w, 3, data).expect("uniform samples lie in [0, 1)")
}

/// The default `size x size` watermark: an off-centre disc, a bar and a
/// corner block at 8-bit exact levels, so it survives PNG storage
/// unchanged. Not symmetric under any rotation or flip.
pub fn default_watermark(size: usize) -> Image {
    let s = size as f64;
    let q = |v: f64| (v * 255.0).round() / 255.0;
    let mut data = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (fy, fx) = ((y as f64 + 0.5) / s, (x as f64 + 0.5) / s);
            let disc = (fy - 0.45).powi(2) + (fx - 0.55).powi(2) < 0.3f64.powi(2);
            let bar = (0.25..0.7).contains(&fy) && (0.48..0.62).contains(&fx);
            let corner = fy < 0.22 && fx < 0.3;
            let v = if bar {
                0.3
            } else if disc {
                1.0
            } else if corner {
                0.65
            } else {
                0.0
            };
            data.push(q(v));
        }
    }
    Image::new(size, size, 1, data).expect("levels lie in [0, 1]")
}
