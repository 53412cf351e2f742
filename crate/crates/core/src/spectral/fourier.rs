use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{require_gray, Spectrum2D, SpectrumKind};
use crate::error::Result;
use crate::imagecore::{Image, Plane};

/// Unnormalized forward 2-D FFT, row-major, DC at index 0.
pub fn fft2(plane: &Plane) -> Vec<Complex<f64>> {
    let (h, w) = plane.dims();
    let mut buf: Vec<Complex<f64>> = plane.data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let row = planner.plan_fft_forward(w);
    for r in buf.chunks_exact_mut(w) {
        row.process(r);
    }
    let col = planner.plan_fft_forward(h);
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
    buf
}

/// Moves index 0 to `(h / 2, w / 2)`.
pub(crate) fn fftshift<T: Copy>(src: &[T], h: usize, w: usize) -> Vec<T> {
    let mut out = src.to_vec();
    for y in 0..h {
        for x in 0..w {
            out[((y + h / 2) % h) * w + (x + w / 2) % w] = src[y * w + x];
        }
    }
    out
}

/// Centred magnitude spectrum `|FFT2(x)| / (h w)`; a constant image of
/// value `c` has DC magnitude `c`.
pub fn dft_magnitude(img: &Image) -> Result<Spectrum2D> {
    require_gray(img, "dft_magnitude")?;
    Ok(dft_magnitude_plane(&img.luma_plane()))
}

pub(crate) fn dft_magnitude_plane(p: &Plane) -> Spectrum2D {
    let (h, w) = p.dims();
    let n = (h * w) as f64;
    let mags: Vec<f64> = fft2(p).iter().map(|c| c.norm() / n).collect();
    Spectrum2D { kind: SpectrumKind::DftMagnitude, height: h, width: w, values: fftshift(&mags, h, w), centered: true }
}

/// Radially averaged power spectral density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RapsdProfile {
    /// `values[k]` is the mean normalized power over the ring of radius `k`.
    pub values: Vec<f64>,
}

impl RapsdProfile {
    pub fn bins(&self) -> usize {
        self.values.len()
    }

    /// `max / min` over bins `from..`; infinite when some bin is zero.
    pub fn flatness(&self, from: usize) -> f64 {
        let tail = &self.values[from.min(self.values.len())..];
        let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Elementwise mean of equally sized profiles.
    pub fn mean(profiles: &[RapsdProfile]) -> Option<RapsdProfile> {
        let first = profiles.first()?;
        let mut acc = vec![0.0; first.bins()];
        for p in profiles {
            for (a, v) in acc.iter_mut().zip(&p.values) {
                *a += v;
            }
        }
        let n = profiles.len() as f64;
        Some(RapsdProfile { values: acc.into_iter().map(|v| v / n).collect() })
    }
}

/// Power `|FFT2(x)|^2 / (h w)^2` averaged over rings of nearest-integer
/// radius `round(sqrt(u^2 + v^2))` around the centred DC, for radii below
/// `floor(min(h, w) / 2)`.
pub fn rapsd(img: &Image) -> Result<RapsdProfile> {
    require_gray(img, "rapsd")?;
    Ok(rapsd_plane(&img.luma_plane()))
}

pub(crate) fn rapsd_plane(p: &Plane) -> RapsdProfile {
    let (h, w) = p.dims();
    let n2 = ((h * w) as f64).powi(2);
    let power: Vec<f64> = fft2(p).iter().map(|c| c.norm_sqr() / n2).collect();
    let power = fftshift(&power, h, w);
    let bins = h.min(w) / 2;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    let (cy, cx) = ((h / 2) as f64, (w / 2) as f64);
    for y in 0..h {
        for x in 0..w {
            let r = ((y as f64 - cy).powi(2) + (x as f64 - cx).powi(2)).sqrt();
            let k = (r + 0.5).floor() as usize;
            if k < bins {
                sum[k] += power[y * w + x];
                count[k] += 1;
            }
        }
    }
    let values = sum.iter().zip(&count).map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 }).collect();
    RapsdProfile { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::rot90;

    fn gray(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> Image {
        let data = (0..h * w).map(|i| f(i / w, i % w)).collect();
        Image::new(h, w, 1, data).unwrap()
    }

    #[test]
    fn constant_has_only_dc() {
        let s = dft_magnitude(&Image::filled(64, 64, 1, 0.5).unwrap()).unwrap();
        for (i, v) in s.values.iter().enumerate() {
            let want = if i == 32 * 64 + 32 { 0.5 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "bin {i}: {v}");
        }
    }

    #[test]
    fn impulse_is_flat() {
        // brute force: F(u,v) = sum x(m,n) e^{..} = 1 for a unit impulse at the origin
        let img = gray(8, 8, |y, x| if y == 0 && x == 0 { 1.0 } else { 0.0 });
        let s = dft_magnitude(&img).unwrap();
        for v in &s.values {
            assert!((v - 1.0 / 64.0).abs() < 1e-15);
        }
    }

    #[test]
    fn negation_shares_magnitude() {
        // negation about 0 is not an image; use 1 - x, whose AC part is -x
        let img = gray(6, 10, |y, x| ((y * 7 + x * 3) % 5) as f64 / 5.0);
        let neg = gray(6, 10, |y, x| 1.0 - img.get(y, x, 0));
        let a = dft_magnitude(&img).unwrap();
        let b = dft_magnitude(&neg).unwrap();
        let dc = 3 * 10 + 5;
        for i in (0..a.values.len()).filter(|&i| i != dc) {
            assert!((a.values[i] - b.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rgb_rejected() {
        let rgb = Image::filled(4, 4, 3, 0.2).unwrap();
        assert!(dft_magnitude(&rgb).is_err());
        assert!(rapsd(&rgb).is_err());
    }

    #[test]
    fn rapsd_constant() {
        let p = rapsd(&Image::filled(32, 32, 1, 0.7).unwrap()).unwrap();
        assert_eq!(p.bins(), 16);
        assert!(p.values[0] > 0.0);
        assert!(p.values[1..].iter().all(|&v| v.abs() < 1e-20));
    }

    #[test]
    fn rapsd_rotation_invariant() {
        let img = gray(16, 16, |y, x| (((y * 31 + x * 17) * 13) % 11) as f64 / 11.0);
        let a = rapsd(&img).unwrap();
        let b = rapsd(&rot90(&img)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
