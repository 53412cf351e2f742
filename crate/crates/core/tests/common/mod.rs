#![allow(dead_code)]

//! Brute-force reference transforms shared by the integration tests.

use std::f64::consts::PI;

use coprguard_core::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_gray(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
    let data = (0..h * w).map(|_| rng.random::<f64>()).collect();
    Image::new(h, w, 1, data).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|sum x e^{-2 pi i (uy/h + vx/w)}| / (h w)` with the zero frequency
/// moved to `(h/2, w/2)`.
pub fn dft_magnitude_direct(x: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for u in 0..h {
        for v in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for y in 0..h {
                for xx in 0..w {
                    let ang = -2.0 * PI * ((u * y) as f64 / h as f64 + (v * xx) as f64 / w as f64);
                    re += x[y * w + xx] * ang.cos();
                    im += x[y * w + xx] * ang.sin();
                }
            }
            let (su, sv) = ((u + h / 2) % h, (v + w / 2) % w);
            out[su * w + sv] = (re * re + im * im).sqrt() / (h * w) as f64;
        }
    }
    out
}

pub fn dct_direct(x: &[f64], h: usize, w: usize) -> Vec<f64> {
    let a = |k: usize, n: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
    let mut out = vec![0.0; h * w];
    for u in 0..h {
        for v in 0..w {
            let mut s = 0.0;
            for y in 0..h {
                for xx in 0..w {
                    s += x[y * w + xx]
                        * (PI * (2 * y + 1) as f64 * u as f64 / (2 * h) as f64).cos()
                        * (PI * (2 * xx + 1) as f64 * v as f64 / (2 * w) as f64).cos();
                }
            }
            out[u * w + v] = a(u, h) * a(v, w) * s;
        }
    }
    out
}

/// Separable orthonormal Haar: 1-D low/high pass along x, then along y.
/// Returns `[cA, cH, cV, cD]` where cH is low-pass in x and high-pass in y.
pub fn haar_separable(x: &[f64], h: usize, w: usize) -> [Vec<f64>; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (bh, bw) = (h / 2, w / 2);
    let mut lo = vec![0.0; h * bw];
    let mut hi = vec![0.0; h * bw];
    for y in 0..h {
        for j in 0..bw {
            let (a, b) = (x[y * w + 2 * j], x[y * w + 2 * j + 1]);
            lo[y * bw + j] = r * (a + b);
            hi[y * bw + j] = r * (a - b);
        }
    }
    let split = |m: &[f64]| {
        let mut l = vec![0.0; bh * bw];
        let mut hh = vec![0.0; bh * bw];
        for i in 0..bh {
            for j in 0..bw {
                let (a, b) = (m[2 * i * bw + j], m[(2 * i + 1) * bw + j]);
                l[i * bw + j] = r * (a + b);
                hh[i * bw + j] = r * (a - b);
            }
        }
        (l, hh)
    };
    let (ca, ch) = split(&lo);
    let (cv, cd) = split(&hi);
    [ca, ch, cv, cd]
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Largest deviation of every transform from its reference on one image,
/// plus the Parseval and reconstruction residuals.
pub struct TransformErrors {
    pub dft: f64,
    pub dct: f64,
    pub haar: f64,
    pub haar_recon: f64,
    pub parseval_dft: f64,
    pub parseval_dct: f64,
    pub parseval_haar: f64,
}

pub fn transform_errors(img: &Image) -> TransformErrors {
    use coprguard_core::spectral::{dct2, dft_magnitude, dwt_haar, idwt_haar};
    let (h, w) = img.dims();
    let x = img.data();
    let dft = dft_magnitude(img).unwrap();
    let dct = dct2(img).unwrap();
    let e = energy(x);
    let mut out = TransformErrors {
        dft: max_abs_diff(&dft.values, &dft_magnitude_direct(x, h, w)),
        dct: max_abs_diff(&dct.values, &dct_direct(x, h, w)),
        haar: 0.0,
        haar_recon: 0.0,
        parseval_dft: (energy(&dft.values) * (h * w) as f64 - e).abs(),
        parseval_dct: (energy(&dct.values) - e).abs(),
        parseval_haar: 0.0,
    };
    if h % 2 == 0 && w % 2 == 0 {
        let pyr = dwt_haar(img).unwrap();
        let reference = haar_separable(x, h, w);
        let ours = [&pyr.ca.data, &pyr.ch.data, &pyr.cv.data, &pyr.cd.data];
        out.haar = ours.iter().zip(&reference).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max);
        out.haar_recon = max_abs_diff(&idwt_haar(&pyr).unwrap().data, x);
        out.parseval_haar = (pyr.energy() - e).abs();
    }
    out
}

/// Excess-watermark statistic with kappa = lambda = 0.05, frozen from an
/// independent evaluation with exact t quantiles.
/// Rows: N; columns: P_u in {0, 0.05, 0.1, 0.2, 0.5, 1}; pairs: P_c in {0, 0.02}.
pub const GRID_N: [usize; 5] = [10, 50, 100, 300, 1000];
pub const GRID_PU: [f64; 6] = [0.0, 0.05, 0.1, 0.2, 0.5, 1.0];
pub const GRID: [[[f64; 2]; 6]; 5] = [
    [
        [-0.15, -0.21],
        [-0.3995177012767334, -0.4595177012767334],
        [-0.39993387979608996, -0.45993387979609],
        [-0.28324517306145336, -0.3432451730614534],
        [0.43344353367318333, 0.3734435336731833],
        [2.8499999999999996, 2.79],
    ],
    [
        [-0.35, -0.49],
        [-0.36539579573098885, -0.5053957957309889],
        [-0.1529652677850561, -0.29296526778505616],
        [0.37937964295325877, 0.23937964295325853],
        [2.311724553691573, 2.171724553691573],
        [6.6499999999999995, 6.51],
    ],
    [
        [-0.49749371855331, -0.696491205974634],
        [-0.36187386278684697, -0.560871350208171],
        [-0.0006236282456068554, -0.19962111566693086],
        [0.8283246932613744, 0.6293272058400501],
        [3.647247888981595, 3.448250401560271],
        [9.45238065251289, 9.253383165091565],
    ],
    [
        [-0.8645808232895291, -1.210413152605341],
        [-0.3596017020256406, -0.7054340313414522],
        [0.3695910930616366, 0.023758763745824973],
        [1.9337561628980644, 1.5879238335822523],
        [6.9562445258926076, 6.610412196576796],
        [16.427035642501053, 16.08120331318524],
    ],
    [
        [-1.5803480629279107, -2.212487288099075],
        [-0.35882027741751055, -0.9909595025886748],
        [1.0864339592996504, 0.45429473412848587],
        [4.08249205061272, 3.4503528254415543],
        [13.39994239363743, 12.767803168466266],
        [30.026613195630304, 29.39447397045914],
    ],
];

