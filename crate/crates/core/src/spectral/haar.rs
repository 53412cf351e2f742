use serde::{Deserialize, Serialize};

use super::require_gray;
use crate::error::{Error, Result};
use crate::imagecore::{Image, Plane};

/// Single-level orthonormal 2-D Haar decomposition. Each band is
/// `(h/2) x (w/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwtPyramid {
    pub ca: Plane,
    pub ch: Plane,
    pub cv: Plane,
    pub cd: Plane,
}

impl DwtPyramid {
    pub fn band_dims(&self) -> (usize, usize) {
        self.ca.dims()
    }

    pub fn energy(&self) -> f64 {
        self.ca.energy() + self.ch.energy() + self.cv.energy() + self.cd.energy()
    }
}

pub fn dwt_haar(img: &Image) -> Result<DwtPyramid> {
    require_gray(img, "dwt_haar")?;
    dwt_haar_plane(&img.luma_plane())
}

/// For each 2x2 block `[p00 p01; p10 p11]`:
/// `cA = (p00+p01+p10+p11)/2`, `cH = (p00+p01-p10-p11)/2`,
/// `cV = (p00-p01+p10-p11)/2`, `cD = (p00-p01-p10+p11)/2`.
pub fn dwt_haar_plane(p: &Plane) -> Result<DwtPyramid> {
    let (h, w) = p.dims();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Dimension(format!("Haar transform needs even dimensions, got {h}x{w}; pad or crop first")));
    }
    let (bh, bw) = (h / 2, w / 2);
    let mut bands = [Plane::zeros(bh, bw), Plane::zeros(bh, bw), Plane::zeros(bh, bw), Plane::zeros(bh, bw)];
    for i in 0..bh {
        for j in 0..bw {
            let p00 = p.at(2 * i, 2 * j);
            let p01 = p.at(2 * i, 2 * j + 1);
            let p10 = p.at(2 * i + 1, 2 * j);
            let p11 = p.at(2 * i + 1, 2 * j + 1);
            let k = i * bw + j;
            bands[0].data[k] = (p00 + p01 + p10 + p11) / 2.0;
            bands[1].data[k] = (p00 + p01 - p10 - p11) / 2.0;
            bands[2].data[k] = (p00 - p01 + p10 - p11) / 2.0;
            bands[3].data[k] = (p00 - p01 - p10 + p11) / 2.0;
        }
    }
    let [ca, ch, cv, cd] = bands;
    Ok(DwtPyramid { ca, ch, cv, cd })
}

/// Exact inverse of [`dwt_haar_plane`]; the result is unclamped.
pub fn idwt_haar(pyr: &DwtPyramid) -> Result<Plane> {
    let (bh, bw) = pyr.ca.dims();
    for b in [&pyr.ch, &pyr.cv, &pyr.cd] {
        if b.dims() != (bh, bw) {
            return Err(Error::Dimension("Haar sub-bands differ in size".into()));
        }
    }
    let mut out = Plane::zeros(2 * bh, 2 * bw);
    for i in 0..bh {
        for j in 0..bw {
            let k = i * bw + j;
            let (a, hh, v, d) = (pyr.ca.data[k], pyr.ch.data[k], pyr.cv.data[k], pyr.cd.data[k]);
            *out.at_mut(2 * i, 2 * j) = (a + hh + v + d) / 2.0;
            *out.at_mut(2 * i, 2 * j + 1) = (a + hh - v - d) / 2.0;
            *out.at_mut(2 * i + 1, 2 * j) = (a - hh + v - d) / 2.0;
            *out.at_mut(2 * i + 1, 2 * j + 1) = (a - hh - v + d) / 2.0;
        }
    }
    Ok(out)
}
