use super::{require_gray, Spectrum2D, SpectrumKind};
use crate::error::{Error, Result};
use crate::imagecore::{Image, Plane};

/// Orthonormal DCT-II basis, `basis[k * n + i] = a_k cos(pi (2i + 1) k / 2n)`
/// with `a_0 = sqrt(1/n)` and `a_k = sqrt(2/n)` otherwise.
fn basis(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n * n];
    for k in 0..n {
        let a = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for i in 0..n {
            b[k * n + i] = a * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    b
}

/// `out[r][k] = sum_i m[r][i] * B[k][i]` (transpose = false) or
/// `sum_i m[r][i] * B[i][k]` (transpose = true), applied along rows.
fn along_rows(data: &[f64], h: usize, w: usize, b: &[f64], inverse: bool) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        let row = &data[r * w..(r + 1) * w];
        for k in 0..w {
            out[r * w + k] = if inverse {
                (0..w).map(|i| row[i] * b[i * w + k]).sum()
            } else {
                let bk = &b[k * w..(k + 1) * w];
                row.iter().zip(bk).map(|(x, y)| x * y).sum()
            };
        }
    }
    out
}

fn transpose(data: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}

fn separable(p: &Plane, inverse: bool) -> Vec<f64> {
    let (h, w) = p.dims();
    let rows = along_rows(&p.data, h, w, &basis(w), inverse);
    let t = transpose(&rows, h, w);
    let cols = along_rows(&t, w, h, &basis(h), inverse);
    transpose(&cols, w, h)
}

/// Orthonormal 2-D DCT-II. The DC coefficient is `mean(x) sqrt(h w)`.
pub fn dct2(img: &Image) -> Result<Spectrum2D> {
    require_gray(img, "dct2")?;
    Ok(dct2_plane(&img.luma_plane()))
}

pub(crate) fn dct2_plane(p: &Plane) -> Spectrum2D {
    Spectrum2D { kind: SpectrumKind::Dct, height: p.height, width: p.width, values: separable(p, false), centered: false }
}

/// Inverse of [`dct2`] (orthonormal DCT-III). The result is unclamped.
pub fn idct2(s: &Spectrum2D) -> Result<Plane> {
    if s.kind != SpectrumKind::Dct {
        return Err(Error::Domain("idct2 needs a DCT spectrum".into()));
    }
    let p = Plane::from_vec(s.height, s.width, s.values.clone())?;
    Plane::from_vec(s.height, s.width, separable(&p, true))
}
