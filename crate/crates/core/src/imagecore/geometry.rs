use serde::{Deserialize, Serialize};

use super::{Image, Plane};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometric {
    Rot90,
    Rot180,
    Rot270,
    FlipH,
    FlipV,
    /// Keep the central `floor(r*h) x floor(r*w)` window, `r` in `(0, 1]`.
    CenterCrop(f64),
    ResizeBilinear(usize, usize),
}

pub fn geometric(img: &Image, op: Geometric) -> Result<Image> {
    Ok(match op {
        Geometric::Rot90 => rot90(img),
        Geometric::Rot180 => rot180(img),
        Geometric::Rot270 => rot270(img),
        Geometric::FlipH => flip_h(img),
        Geometric::FlipV => flip_v(img),
        Geometric::CenterCrop(r) => center_crop(img, r)?,
        Geometric::ResizeBilinear(h, w) => resize_bilinear(img, h, w)?,
    })
}

fn remap(img: &Image, out_h: usize, out_w: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> Image {
    let c = img.channels();
    let mut data = Vec::with_capacity(out_h * out_w * c);
    for y in 0..out_h {
        for x in 0..out_w {
            let (sy, sx) = src(y, x);
            let base = (sy * img.width() + sx) * c;
            data.extend_from_slice(&img.data()[base..base + c]);
        }
    }
    Image::from_parts_unchecked(out_h, out_w, c, data)
}

/// Quarter turn clockwise.
pub fn rot90(img: &Image) -> Image {
    let (h, w) = img.dims();
    remap(img, w, h, |y, x| (h - 1 - x, y))
}

pub fn rot180(img: &Image) -> Image {
    let (h, w) = img.dims();
    remap(img, h, w, |y, x| (h - 1 - y, w - 1 - x))
}

/// Quarter turn counter-clockwise.
pub fn rot270(img: &Image) -> Image {
    let (h, w) = img.dims();
    remap(img, w, h, |y, x| (x, w - 1 - y))
}

/// Mirror left-right.
pub fn flip_h(img: &Image) -> Image {
    let (h, w) = img.dims();
    remap(img, h, w, |y, x| (y, w - 1 - x))
}

/// Mirror top-bottom.
pub fn flip_v(img: &Image) -> Image {
    let (h, w) = img.dims();
    remap(img, h, w, |y, x| (h - 1 - y, x))
}

/// Size and top-left offset of the central crop window for ratio `r`.
pub(crate) fn crop_window(h: usize, w: usize, ratio: f64) -> (usize, usize, usize, usize) {
    let ch = ((ratio * h as f64).floor() as usize).clamp(1, h);
    let cw = ((ratio * w as f64).floor() as usize).clamp(1, w);
    (ch, cw, (h - ch) / 2, (w - cw) / 2)
}

pub fn center_crop(img: &Image, ratio: f64) -> Result<Image> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Domain(format!("crop ratio {ratio} outside (0, 1]")));
    }
    let (h, w) = img.dims();
    let (ch, cw, oy, ox) = crop_window(h, w, ratio);
    Ok(remap(img, ch, cw, |y, x| (y + oy, x + ox)))
}

#[derive(Clone, Copy)]
struct Tap {
    i0: usize,
    i1: usize,
    t: f64,
}

/// Half-pixel-centre sampling positions, clamped to the edge.
fn taps(n_in: usize, n_out: usize) -> Vec<Tap> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            Tap { i0, i1, t: s - i0 as f64 }
        })
        .collect()
}

fn resize_interleaved(src: &[f64], h: usize, w: usize, c: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    let ty = taps(h, out_h);
    let tx = taps(w, out_w);
    let mut out = Vec::with_capacity(out_h * out_w * c);
    for a in &ty {
        for b in &tx {
            for k in 0..c {
                let p = |y: usize, x: usize| src[(y * w + x) * c + k];
                let top = p(a.i0, b.i0) * (1.0 - b.t) + p(a.i0, b.i1) * b.t;
                let bot = p(a.i1, b.i0) * (1.0 - b.t) + p(a.i1, b.i1) * b.t;
                out.push(top * (1.0 - a.t) + bot * a.t);
            }
        }
    }
    out
}

/// Bilinear resize with pixel centres at half-integer positions and edge
/// clamping. Output values are convex combinations, so they stay in range.
pub fn resize_bilinear(img: &Image, out_h: usize, out_w: usize) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::Dimension(format!("resize target {out_h}x{out_w}")));
    }
    if (out_h, out_w) == img.dims() {
        return Ok(img.clone());
    }
    let data = resize_interleaved(img.data(), img.height(), img.width(), img.channels(), out_h, out_w);
    Ok(Image::from_parts_unchecked(out_h, out_w, img.channels(), data))
}

pub(crate) fn resize_plane(p: &Plane, out_h: usize, out_w: usize) -> Plane {
    if (out_h, out_w) == p.dims() {
        return p.clone();
    }
    let data = resize_interleaved(&p.data, p.height, p.width, 1, out_h, out_w);
    Plane { height: out_h, width: out_w, data }
}

/// One of the eight symmetries of the square, used by orientation search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dihedral {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    FlipH,
    FlipV,
    /// Mirror across the main diagonal.
    Transpose,
    /// Mirror across the anti-diagonal.
    AntiTranspose,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rot90,
        Dihedral::Rot180,
        Dihedral::Rot270,
        Dihedral::FlipH,
        Dihedral::FlipV,
        Dihedral::Transpose,
        Dihedral::AntiTranspose,
    ];

    pub fn apply(self, img: &Image) -> Image {
        match self {
            Dihedral::Identity => img.clone(),
            Dihedral::Rot90 => rot90(img),
            Dihedral::Rot180 => rot180(img),
            Dihedral::Rot270 => rot270(img),
            Dihedral::FlipH => flip_h(img),
            Dihedral::FlipV => flip_v(img),
            Dihedral::Transpose => rot270(&flip_h(img)),
            Dihedral::AntiTranspose => rot90(&flip_h(img)),
        }
    }

    pub fn inverse(self) -> Dihedral {
        match self {
            Dihedral::Rot90 => Dihedral::Rot270,
            Dihedral::Rot270 => Dihedral::Rot90,
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize, c: usize) -> Image {
        let n = h * w * c;
        Image::new(h, w, c, (0..n).map(|i| i as f64 / n as f64).collect()).unwrap()
    }

    #[test]
    fn rotations_compose_to_identity() {
        for (h, w) in [(4, 4), (3, 5), (5, 2), (1, 7)] {
            let img = ramp(h, w, 3);
            assert_eq!(rot90(&rot90(&rot90(&rot90(&img)))), img);
            assert_eq!(rot180(&rot180(&img)), img);
            assert_eq!(rot90(&rot270(&img)), img);
            assert_eq!(rot90(&rot90(&img)), rot180(&img));
            assert_eq!(flip_h(&flip_h(&img)), img);
            assert_eq!(flip_v(&flip_v(&img)), img);
        }
    }

    #[test]
    fn rot90_is_clockwise() {
        // 1 2     3 1
        // 3 4  -> 4 2
        let img = Image::new(2, 2, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(rot90(&img).data(), &[0.3, 0.1, 0.4, 0.2]);
    }

    #[test]
    fn dihedral_inverse_undoes_pose() {
        let img = ramp(6, 6, 1);
        for g in Dihedral::ALL {
            assert_eq!(g.inverse().apply(&g.apply(&img)), img, "{g:?}");
        }
        let distinct: std::collections::HashSet<Vec<u64>> = Dihedral::ALL
            .iter()
            .map(|g| g.apply(&img).data().iter().map(|v| v.to_bits()).collect())
            .collect();
        assert_eq!(distinct.len(), 8);
    }

    #[test]
    fn center_crop_window() {
        let img = ramp(10, 10, 1);
        assert_eq!(center_crop(&img, 1.0).unwrap(), img);
        let c = center_crop(&img, 0.5).unwrap();
        assert_eq!(c.dims(), (5, 5));
        assert_eq!(c.get(0, 0, 0), img.get(2, 2, 0));
        assert!(center_crop(&img, 0.0).is_err());
        assert!(center_crop(&img, 1.1).is_err());
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = ramp(4, 6, 3);
        assert_eq!(resize_bilinear(&img, 4, 6).unwrap(), img);
        let k = Image::filled(5, 5, 1, 0.25).unwrap();
        for v in resize_bilinear(&k, 13, 8).unwrap().data() {
            assert!((v - 0.25).abs() < 1e-15);
        }
        assert!(resize_bilinear(&img, 0, 3).is_err());
    }

    #[test]
    fn resize_upsample_by_two_interpolates() {
        let img = Image::new(1, 2, 1, vec![0.0, 1.0]).unwrap();
        let up = resize_bilinear(&img, 1, 4).unwrap();
        // centres map to -0.25, 0.25, 0.75, 1.25 in source coordinates
        let want = [0.0, 0.25, 0.75, 1.0];
        for (a, b) in up.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
